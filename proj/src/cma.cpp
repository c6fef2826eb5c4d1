#include "bpinn/cma.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "bpinn/rng.hpp"

namespace bpinn {
namespace {

// strategy parameters per Hansen, "The CMA evolution strategy: a tutorial",
// using the positive half of the default weight profile
struct CmaParams {
    int mu = 0;
    Eigen::VectorXd weights;  // normalized, length mu
    double mu_eff = 0.0;
    double c_sigma = 0.0;
    double d_sigma = 0.0;
    double c_c = 0.0;
    double c1 = 0.0;
    double c_mu = 0.0;
    double chi_n = 0.0;
};

CmaParams make_params(int dim, int n_pop) {
    CmaParams p;
    const double d = static_cast<double>(dim);
    p.mu = n_pop / 2;
    if (p.mu < 1) throw std::runtime_error("cma: population too small");
    p.weights.resize(p.mu);
    for (int i = 0; i < p.mu; ++i)
        p.weights[i] = std::log((n_pop + 1) / 2.0) - std::log(i + 1.0);
    const double wsum = p.weights.sum();
    p.weights /= wsum;
    p.mu_eff = 1.0 / p.weights.squaredNorm();

    p.c_sigma = (p.mu_eff + 2.0) / (d + p.mu_eff + 5.0);
    p.d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((p.mu_eff - 1.0) / (d + 1.0)) - 1.0) + p.c_sigma;
    p.c_c = (4.0 + p.mu_eff / d) / (d + 4.0 + 2.0 * p.mu_eff / d);
    p.c1 = 2.0 / ((d + 1.3) * (d + 1.3) + p.mu_eff);
    p.c_mu = std::min(1.0 - p.c1,
                      2.0 * (p.mu_eff - 2.0 + 1.0 / p.mu_eff) / ((d + 2.0) * (d + 2.0) + p.mu_eff));
    p.chi_n = std::sqrt(d) * (1.0 - 1.0 / (4.0 * d) + 1.0 / (21.0 * d * d));
    return p;
}

// refresh the eigendecomposition cache; floor tiny/negative eigenvalues so
// the sampler never sees a singular covariance
void refresh_eigen(EsState& state) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(state.covariance);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("cma: covariance eigendecomposition failed");
    Eigen::VectorXd ev = es.eigenvalues();
    const double max_ev = std::max(ev.maxCoeff(), 0.0);
    const double floor = (max_ev > 0.0) ? 1e-14 * max_ev : 1e-14;
    bool repaired = false;
    for (int i = 0; i < ev.size(); ++i) {
        if (ev[i] < floor) {
            ev[i] = floor;
            repaired = true;
        }
    }
    state.eigvecs = es.eigenvectors();
    state.eigroots = ev.cwiseSqrt();
    if (repaired) {
        state.covariance = state.eigvecs * ev.asDiagonal() * state.eigvecs.transpose();
        ++state.eigen_repairs;
        std::fprintf(stderr, "warning: cma covariance repaired at generation %d (eigenvalue floor)\n",
                     state.generation);
    }
}

}  // namespace

EsState es_init(int dim, double initial_std) {
    if (dim < 1) throw std::runtime_error("cma: dimension must be positive");
    if (!(initial_std > 0.0)) throw std::runtime_error("cma: initial std must be positive");
    EsState s;
    s.mean = Eigen::VectorXd::Zero(dim);
    s.step_size = initial_std;
    s.covariance = Eigen::MatrixXd::Identity(dim, dim);
    s.path_sigma = Eigen::VectorXd::Zero(dim);
    s.path_cov = Eigen::VectorXd::Zero(dim);
    s.eigvecs = Eigen::MatrixXd::Identity(dim, dim);
    s.eigroots = Eigen::VectorXd::Ones(dim);
    return s;
}

std::vector<Eigen::VectorXd> es_ask(const EsState& state, int n_pop, std::uint64_t seed) {
    if (n_pop < 2) throw std::runtime_error("cma: population must be at least 2");
    const int d = state.dim();
    std::vector<Eigen::VectorXd> out;
    out.reserve(n_pop);
    Eigen::VectorXd z(d);
    for (int i = 0; i < n_pop; ++i) {
        Rng rng(stream_key(seed, 0xC3A5u, static_cast<std::uint64_t>(state.generation),
                           static_cast<std::uint64_t>(i)));
        for (int j = 0; j < d; ++j) z[j] = rng.normal();
        out.push_back(state.mean + state.step_size * (state.eigvecs * (state.eigroots.asDiagonal() * z)));
    }
    return out;
}

void es_tell(EsState& state, const std::vector<Eigen::VectorXd>& offspring,
             const std::vector<double>& fitness) {
    const int n_pop = static_cast<int>(offspring.size());
    if (n_pop < 2 || fitness.size() != offspring.size())
        throw std::runtime_error("cma: tell needs matching offspring and fitness");
    const int d = state.dim();
    const CmaParams p = make_params(d, n_pop);

    // rank by fitness, best first; stable so ties keep sampling order
    std::vector<int> order(n_pop);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return fitness[a] > fitness[b]; });

    const Eigen::VectorXd mean_old = state.mean;
    std::vector<Eigen::VectorXd> y(p.mu);
    Eigen::VectorXd y_w = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < p.mu; ++i) {
        y[i] = (offspring[order[i]] - mean_old) / state.step_size;
        y_w += p.weights[i] * y[i];
    }
    state.mean = mean_old + state.step_size * y_w;

    // C^{-1/2} y_w through the cached decomposition
    Eigen::VectorXd c_inv_sqrt_yw =
        state.eigvecs * (state.eigroots.cwiseInverse().asDiagonal() * (state.eigvecs.transpose() * y_w));

    state.path_sigma = (1.0 - p.c_sigma) * state.path_sigma +
                       std::sqrt(p.c_sigma * (2.0 - p.c_sigma) * p.mu_eff) * c_inv_sqrt_yw;

    const int gen1 = state.generation + 1;
    const double ps_norm = state.path_sigma.norm();
    const double denom = std::sqrt(1.0 - std::pow(1.0 - p.c_sigma, 2.0 * gen1));
    const bool h_sigma = ps_norm / denom < (1.4 + 2.0 / (d + 1.0)) * p.chi_n;

    state.path_cov = (1.0 - p.c_c) * state.path_cov;
    if (h_sigma) state.path_cov += std::sqrt(p.c_c * (2.0 - p.c_c) * p.mu_eff) * y_w;

    // rank-one + rank-mu covariance update; the (1-h_sigma) term compensates
    // for the path update skipped on stalls
    const double delta_h = (h_sigma ? 0.0 : 1.0) * p.c_c * (2.0 - p.c_c);
    Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < p.mu; ++i)
        rank_mu.selfadjointView<Eigen::Lower>().rankUpdate(y[i], p.weights[i]);
    rank_mu = rank_mu.selfadjointView<Eigen::Lower>();
    state.covariance = (1.0 + p.c1 * delta_h - p.c1 - p.c_mu) * state.covariance +
                       p.c1 * (state.path_cov * state.path_cov.transpose()) + p.c_mu * rank_mu;

    state.step_size *= std::exp((p.c_sigma / p.d_sigma) * (ps_norm / p.chi_n - 1.0));
    if (!std::isfinite(state.step_size) || state.step_size <= 0.0)
        throw std::runtime_error("cma: step size degenerated");

    state.generation = gen1;
    refresh_eigen(state);
}

std::string serialize_es_state(const EsState& state) {
    nlohmann::json j;
    const int d = state.dim();
    j["dim"] = d;
    j["mean"] = std::vector<double>(state.mean.data(), state.mean.data() + d);
    j["step_size"] = state.step_size;
    j["path_sigma"] = std::vector<double>(state.path_sigma.data(), state.path_sigma.data() + d);
    j["path_cov"] = std::vector<double>(state.path_cov.data(), state.path_cov.data() + d);
    j["generation"] = state.generation;
    j["eigen_repairs"] = state.eigen_repairs;
    std::vector<double> cov(static_cast<std::size_t>(d) * d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) cov[static_cast<std::size_t>(r) * d + c] = state.covariance(r, c);
    j["covariance"] = cov;
    return j.dump(2) + "\n";
}

EsState deserialize_es_state(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    for (const char* field : {"dim", "mean", "step_size", "path_sigma", "path_cov", "generation",
                              "covariance"}) {
        if (!j.contains(field))
            throw std::runtime_error(std::string("es state json: missing field '") + field + "'");
    }
    const int d = j["dim"].get<int>();
    auto load_vec = [&](const char* field) {
        auto v = j[field].get<std::vector<double>>();
        if (static_cast<int>(v.size()) != d)
            throw std::runtime_error(std::string("es state json: bad length for '") + field + "'");
        return Eigen::Map<const Eigen::VectorXd>(v.data(), d).eval();
    };
    EsState s;
    s.mean = load_vec("mean");
    s.step_size = j["step_size"].get<double>();
    s.path_sigma = load_vec("path_sigma");
    s.path_cov = load_vec("path_cov");
    s.generation = j["generation"].get<int>();
    s.eigen_repairs = j.value("eigen_repairs", 0);
    auto cov = j["covariance"].get<std::vector<double>>();
    if (cov.size() != static_cast<std::size_t>(d) * d)
        throw std::runtime_error("es state json: bad covariance length");
    s.covariance.resize(d, d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) s.covariance(r, c) = cov[static_cast<std::size_t>(r) * d + c];
    refresh_eigen(s);
    return s;
}

}  // namespace bpinn
