#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace bpinn {

// CMA-ES over raw search vectors, maximizing fitness.  Parameterization
// follows Hansen's tutorial defaults with positive recombination weights
// only (no active update).  All sampling is keyed off (seed, generation,
// offspring index) so a run is reproducible from its EsState alone.
struct EsState {
    Eigen::VectorXd mean;
    double step_size = 1.0;
    Eigen::MatrixXd covariance;
    Eigen::VectorXd path_sigma;
    Eigen::VectorXd path_cov;
    int generation = 0;
    int eigen_repairs = 0;  // how many tell() calls needed an eigenvalue floor

    // eigendecomposition cache for covariance, refreshed by es_tell and on
    // deserialization: covariance = eigvecs * diag(eigroots^2) * eigvecs^T
    Eigen::MatrixXd eigvecs;
    Eigen::VectorXd eigroots;

    int dim() const { return static_cast<int>(mean.size()); }
};

// zero mean, unit covariance scaled through step_size = initial_std
EsState es_init(int dim, double initial_std);

// Sample n_pop offspring from N(mean, step_size^2 * covariance).  Pure:
// the same (state.generation, seed) always yields the same draws.
std::vector<Eigen::VectorXd> es_ask(const EsState& state, int n_pop, std::uint64_t seed);

// Rank-based update; fitness[i] scores offspring[i], larger is better.
// Offspring must be exactly the vectors from the preceding es_ask.
void es_tell(EsState& state, const std::vector<Eigen::VectorXd>& offspring,
             const std::vector<double>& fitness);

std::string serialize_es_state(const EsState& state);
EsState deserialize_es_state(const std::string& text);

}  // namespace bpinn
