#include "bpinn/lifetime.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "bpinn/rng.hpp"

namespace bpinn {

namespace {

constexpr int kMaxHeads = 4;
constexpr int kMaxDim = 4;

// Stack copy of one point (PointSet storage is column-major).
inline void load_point(const PointSet& ps, Eigen::Index i, double* buf) {
  for (Eigen::Index d = 0; d < ps.p.cols(); ++d) buf[d] = ps.p(i, d);
}

inline LagView make_view(int heads, int dim, const double* v, const double* g) {
  LagView view;
  view.values = v;
  view.grads = g;
  view.n_heads = heads;
  view.n_input = dim;
  return view;
}

// Per-point lag buffers from a LagField row (zeros when the field is empty,
// i.e. the u=0 first iterate).
struct LagRow {
  double vals[kMaxHeads] = {};
  double grads[kMaxHeads * kMaxDim] = {};
  void load(const LagField* lag, Eigen::Index i, int heads, int dim) {
    if (!lag || lag->empty()) return;
    for (int h = 0; h < heads; ++h) {
      vals[h] = lag->values(i, h);
      for (int d = 0; d < (int)lag->grads.size(); ++d)
        grads[h * dim + d] = lag->grads[d](i, h);
    }
  }
};

double quad_form_lse(const Eigen::MatrixXd& M0, const Eigen::MatrixXd& Atb,
                     const Eigen::MatrixXd& w, double b_sq) {
  // ||Aw-b||^2 = w'A'Aw - 2 w'A'b + ||b||^2, clamped against cancellation.
  double q = b_sq;
  for (Eigen::Index h = 0; h < w.cols(); ++h) {
    q += w.col(h).dot(M0.selfadjointView<Eigen::Lower>() * w.col(h));
    q -= 2.0 * w.col(h).dot(Atb.col(h));
  }
  return std::max(q, 0.0);
}

}  // namespace

LinearSystem assemble(const Task& task, const HiddenLayer& layer,
                      const LagField* lag, double row_weight_icbc) {
  if (task.n_outputs > kMaxHeads || task.n_input > kMaxDim)
    throw std::invalid_argument("assemble: unsupported head/input count");
  const int heads = task.n_outputs;
  const Eigen::Index ntot = layer.n_total();
  const Eigen::Index n_pde = task.pde_points->size();
  Eigen::Index n_con = 0;
  for (const auto& c : task.constraints) n_con += c.points->size();

  LinearSystem sys;
  sys.A = Eigen::MatrixXd::Zero(n_pde + n_con, ntot);
  sys.b = Eigen::MatrixXd::Zero(n_pde + n_con, heads);

  FeatureTables pde_tab(layer, task.pde_points);
  for (const auto& term : task.terms) {
    Eigen::MatrixXd dmat = pde_tab.derivative(term.multi_index);
    if (!term.coeff_fn) {
      sys.A.topRows(n_pde) += term.coeff * dmat;
    } else {
      double pt[kMaxDim];
      for (Eigen::Index i = 0; i < n_pde; ++i) {
        load_point(*task.pde_points, i, pt);
        sys.A.row(i) += term.coeff_fn(pt) * dmat.row(i);
      }
    }
  }
  for (const auto& term : task.lagged_terms) {
    Eigen::MatrixXd dmat = pde_tab.derivative(term.multi_index);
    double pt[kMaxDim];
    LagRow row;
    for (Eigen::Index i = 0; i < n_pde; ++i) {
      load_point(*task.pde_points, i, pt);
      row.load(lag, i, heads, task.n_input);
      const LagView view = make_view(heads, task.n_input, row.vals, row.grads);
      sys.A.row(i) += term.coeff(pt, view) * dmat.row(i);
    }
  }
  {
    double pt[kMaxDim];
    LagRow row;
    for (Eigen::Index i = 0; i < n_pde; ++i) {
      load_point(*task.pde_points, i, pt);
      row.load(lag, i, heads, task.n_input);
      const LagView view = make_view(heads, task.n_input, row.vals, row.grads);
      for (int h = 0; h < heads; ++h) {
        double v = task.source ? task.source(h, pt) : 0.0;
        if (task.lagged_source) v += task.lagged_source(h, pt, view);
        sys.b(i, h) = v;
      }
    }
  }

  Eigen::Index r = n_pde;
  for (const auto& con : task.constraints) {
    const Eigen::Index n = con.points->size();
    FeatureTables tab(layer, con.points);
    Eigen::MatrixXd rows = tab.derivative(con.multi_index);
    if (con.points2) {
      FeatureTables tab2(layer, con.points2);
      rows -= tab2.derivative(con.multi_index);
    }
    sys.A.middleRows(r, n) = row_weight_icbc * rows;
    sys.b.middleRows(r, n) = row_weight_icbc * con.targets;
    r += n;
  }

  if (!sys.A.allFinite() || !sys.b.allFinite()) {
    for (Eigen::Index i = 0; i < sys.A.rows(); ++i)
      if (!sys.A.row(i).allFinite() || !sys.b.row(i).allFinite())
        throw std::runtime_error("assemble: non-finite entry in row " +
                                 std::to_string(i));
  }
  return sys;
}

double compute_lse(const LinearSystem& sys, const Eigen::MatrixXd& w) {
  return (sys.A * w - sys.b).squaredNorm();
}

double compute_mse(const Task& task, const HiddenLayer& layer,
                   const Eigen::MatrixXd& w) {
  if (!task.labels.points || task.labels.values.size() == 0) return 0.0;
  FeatureTables tab(layer, task.labels.points);
  Eigen::MatrixXd pred = tab.order_table(0) * w;
  return (pred - task.labels.values).squaredNorm() /
         double(task.labels.values.size());
}

// ---------------------------------------------------------------------------
// BatchEvaluator

struct BatchEvaluator::Impl {
  std::map<const PointSet*, FeatureTables> tables;

  struct SharedSystem {  // keyed by task.system_key
    bool dual = false;
    bool llt_ok = false;
    Eigen::LLT<Eigen::MatrixXd> llt;
    Eigen::MatrixXd A;
  };
  std::map<std::uint64_t, SharedSystem> systems;

  struct Family {  // constant-coefficient operator: term-pair Gram blocks
    std::vector<Eigen::MatrixXd> pair_gram;  // index t*(t+1)/2+u for u<=t
    Eigen::MatrixXd con_gram;                // weighted constraint block Gram
  };
  std::map<std::uint64_t, Family> families;

  FeatureTables& tab(const HiddenLayer& layer, const PointSetPtr& p) {
    auto it = tables.find(p.get());
    if (it == tables.end())
      it = tables.emplace(p.get(), FeatureTables(layer, p)).first;
    return it->second;
  }
};

BatchEvaluator::BatchEvaluator(const HiddenLayer& layer, double lambda,
                               double row_weight)
    : layer_(&layer),
      lambda_(lambda),
      row_weight_(row_weight),
      impl_(new Impl) {}

BatchEvaluator::~BatchEvaluator() = default;

namespace {

// Weighted constraint rows and targets for one task.
void build_constraints(BatchEvaluator::Impl& impl, const HiddenLayer& layer,
                       const Task& task, double rw, Eigen::MatrixXd& rows,
                       Eigen::MatrixXd& targets) {
  Eigen::Index n_con = 0;
  for (const auto& c : task.constraints) n_con += c.points->size();
  rows.resize(n_con, layer.n_total());
  targets.resize(n_con, task.n_outputs);
  Eigen::Index r = 0;
  for (const auto& con : task.constraints) {
    const Eigen::Index n = con.points->size();
    rows.middleRows(r, n) =
        rw * impl.tab(layer, con.points).derivative(con.multi_index);
    if (con.points2)
      rows.middleRows(r, n) -=
          rw * impl.tab(layer, con.points2).derivative(con.multi_index);
    targets.middleRows(r, n) = rw * con.targets;
    r += n;
  }
}

Eigen::MatrixXd base_pde_matrix(BatchEvaluator::Impl& impl,
                                const HiddenLayer& layer, const Task& task) {
  const Eigen::Index n_pde = task.pde_points->size();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n_pde, layer.n_total());
  FeatureTables& tab = impl.tab(layer, task.pde_points);
  for (const auto& term : task.terms) {
    Eigen::MatrixXd dmat = tab.derivative(term.multi_index);
    if (!term.coeff_fn) {
      A += term.coeff * dmat;
    } else {
      double pt[kMaxDim];
      for (Eigen::Index i = 0; i < n_pde; ++i) {
        load_point(*task.pde_points, i, pt);
        A.row(i) += term.coeff_fn(pt) * dmat.row(i);
      }
    }
  }
  return A;
}

Eigen::MatrixXd base_source(const Task& task) {
  const Eigen::Index n_pde = task.pde_points->size();
  Eigen::MatrixXd b(n_pde, task.n_outputs);
  double pt[kMaxDim];
  for (Eigen::Index i = 0; i < n_pde; ++i) {
    load_point(*task.pde_points, i, pt);
    for (int h = 0; h < task.n_outputs; ++h)
      b(i, h) = task.source ? task.source(h, pt) : 0.0;
  }
  return b;
}

std::uint64_t family_key(const Task& task) {
  std::uint64_t h = stream_key(0xFA371Bu,
                               reinterpret_cast<std::uintptr_t>(task.pde_points.get()));
  for (const auto& t : task.terms)
    for (int k : t.multi_index) h = stream_key(h, 0x7E53u, (std::uint64_t)k);
  for (const auto& c : task.constraints) {
    h = stream_key(h, reinterpret_cast<std::uintptr_t>(c.points.get()),
                   reinterpret_cast<std::uintptr_t>(c.points2.get()));
    for (int k : c.multi_index) h = stream_key(h, 0x11u, (std::uint64_t)k);
  }
  return h;
}

double labels_mse(BatchEvaluator::Impl& im, const HiddenLayer& layer,
                  const Task& task, const Eigen::MatrixXd& w) {
  if (!task.labels.points || task.labels.values.size() == 0) return 0.0;
  FeatureTables& lab = im.tab(layer, task.labels.points);
  return (lab.order_table(0) * w - task.labels.values).squaredNorm() /
         double(task.labels.values.size());
}

}  // namespace

Solution BatchEvaluator::learn(const Task& task, const LearnOptions& opts) {
  if (task.n_outputs > kMaxHeads || task.n_input > kMaxDim)
    throw std::invalid_argument("learn: unsupported head/input count");
  const int heads = task.n_outputs;
  const Eigen::Index ntot = layer_->n_total();
  const Eigen::Index n_pde = task.pde_points->size();
  Impl& im = *impl_;
  FeatureTables& pde_tab = im.tab(*layer_, task.pde_points);

  Eigen::MatrixXd con_rows, con_targets;
  build_constraints(im, *layer_, task, row_weight_, con_rows, con_targets);
  const Eigen::Index n_con = con_rows.rows();
  const Eigen::Index n_rows = n_pde + n_con;
  Eigen::MatrixXd b0 = base_source(task);

  const int n_iters =
      task.nonlinear ? (opts.n_lag_override > 0 ? opts.n_lag_override : task.n_lag)
                     : 1;

  Solution sol;
  sol.w.setZero(ntot, heads);

  bool const_coeffs = true;
  for (const auto& t : task.terms)
    if (t.coeff_fn) const_coeffs = false;
  const bool lag_in_operator = !task.lagged_terms.empty();

  // --- Path 1: shared full system across tasks (linear, common operator).
  if (!task.nonlinear && task.system_key != 0) {
    auto it = im.systems.find(task.system_key);
    if (it == im.systems.end()) {
      Impl::SharedSystem ss;
      ss.A.resize(n_rows, ntot);
      ss.A.topRows(n_pde) = base_pde_matrix(im, *layer_, task);
      ss.A.bottomRows(n_con) = con_rows;
      ss.dual = n_rows < ntot;
      const Eigen::Index s = ss.dual ? n_rows : ntot;
      Eigen::MatrixXd M = Eigen::MatrixXd::Zero(s, s);
      if (ss.dual)
        M.selfadjointView<Eigen::Lower>().rankUpdate(ss.A);
      else
        M.selfadjointView<Eigen::Lower>().rankUpdate(ss.A.transpose());
      M.diagonal().array() += lambda_;
      M = M.selfadjointView<Eigen::Lower>();
      ss.llt.compute(M);
      ss.llt_ok = ss.llt.info() == Eigen::Success;
      it = im.systems.emplace(task.system_key, std::move(ss)).first;
    }
    const Impl::SharedSystem& ss = it->second;
    Eigen::MatrixXd b(n_rows, heads);
    b.topRows(n_pde) = b0;
    b.bottomRows(n_con) = con_targets;
    if (ss.llt_ok) {
      if (ss.dual)
        sol.w = ss.A.transpose() * ss.llt.solve(b);
      else
        sol.w = ss.llt.solve(ss.A.transpose() * b);
    }
    if (!ss.llt_ok || !sol.w.allFinite())
      sol.w = solve_ridge_multi(ss.A, b, lambda_);
    sol.lse = (ss.A * sol.w - b).squaredNorm();
    sol.lag_history.assign(1, sol.lse);
    sol.mse = labels_mse(im, *layer_, task, sol.w);
    return sol;
  }

  // --- Path 2: constant-coefficient operator family. Term-pair Grams are
  // shared across tasks that differ only in the constants (and in b); also
  // covers source-lagged nonlinear tasks, where A is fixed over lag
  // iterations and only b changes.
  const bool family_ok = const_coeffs && !lag_in_operator &&
                         (!task.nonlinear || task.operator_lag_free) &&
                         task.system_key == 0 && !task.terms.empty() &&
                         task.terms.size() <= 3 && n_rows >= ntot;
  if (family_ok) {
    const std::uint64_t fkey = family_key(task);
    auto it = im.families.find(fkey);
    const int nt = (int)task.terms.size();
    if (it == im.families.end()) {
      Impl::Family fam;
      std::vector<Eigen::MatrixXd> dmats(nt);
      for (int t = 0; t < nt; ++t)
        dmats[t] = pde_tab.derivative(task.terms[t].multi_index);
      for (int t = 0; t < nt; ++t)
        for (int u = 0; u <= t; ++u) {
          if (u == t) {
            Eigen::MatrixXd G = Eigen::MatrixXd::Zero(ntot, ntot);
            G.selfadjointView<Eigen::Lower>().rankUpdate(dmats[t].transpose());
            fam.pair_gram.push_back(Eigen::MatrixXd(G.selfadjointView<Eigen::Lower>()));
          } else {
            fam.pair_gram.push_back(dmats[t].transpose() * dmats[u]);
          }
        }
      fam.con_gram = Eigen::MatrixXd::Zero(ntot, ntot);
      fam.con_gram.selfadjointView<Eigen::Lower>().rankUpdate(con_rows.transpose());
      fam.con_gram = fam.con_gram.selfadjointView<Eigen::Lower>();
      it = im.families.emplace(fkey, std::move(fam)).first;
    }
    const Impl::Family& fam = it->second;
    Eigen::MatrixXd M0 = fam.con_gram;
    for (int t = 0, p = 0; t < nt; ++t)
      for (int u = 0; u <= t; ++u, ++p) {
        const double c = task.terms[t].coeff * task.terms[u].coeff;
        if (u == t)
          M0 += c * fam.pair_gram[p];
        else
          M0 += c * (fam.pair_gram[p] + fam.pair_gram[p].transpose());
      }
    Eigen::MatrixXd M = M0;
    M.diagonal().array() += lambda_;
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    const bool llt_ok = llt.info() == Eigen::Success;

    LagField lag;
    double prev_lse = 0.0;
    for (int iter = 0; iter < n_iters; ++iter) {
      Eigen::MatrixXd b_pde = b0;
      if (task.lagged_source) {
        double pt[kMaxDim];
        LagRow row;
        for (Eigen::Index i = 0; i < n_pde; ++i) {
          load_point(*task.pde_points, i, pt);
          row.load(iter == 0 ? nullptr : &lag, i, heads, task.n_input);
          const LagView view =
              make_view(heads, task.n_input, row.vals, row.grads);
          for (int h = 0; h < heads; ++h)
            b_pde(i, h) += task.lagged_source(h, pt, view);
        }
      }
      // A'b assembled termwise from the order tables (A itself never built)
      Eigen::MatrixXd Atb = con_rows.transpose() * con_targets;
      for (const auto& term : task.terms) {
        const int o = std::accumulate(term.multi_index.begin(),
                                      term.multi_index.end(), 0);
        Eigen::MatrixXd proj = pde_tab.order_table(o).transpose() * b_pde;
        if (o > 0)
          proj.array().colwise() *=
              pde_tab.column_scale(term.multi_index).array();
        Atb += term.coeff * proj;
      }
      bool ok = llt_ok;
      if (ok) {
        sol.w = llt.solve(Atb);
        ok = sol.w.allFinite();
      }
      if (!ok) {
        // Degenerate basis: fall back to the explicit reference route.
        LinearSystem sys = assemble(task, *layer_, iter == 0 ? nullptr : &lag,
                                    row_weight_);
        sys.b.topRows(n_pde) = b_pde;
        sol.w = solve_ridge_multi(sys.A, sys.b, lambda_);
        sol.lse = (sys.A * sol.w - sys.b).squaredNorm();
      } else {
        const double b_sq =
            b_pde.squaredNorm() + con_targets.squaredNorm();
        sol.lse = quad_form_lse(M0, Atb, sol.w, b_sq);
      }
      sol.lag_history.push_back(sol.lse);
      if (task.nonlinear && iter + 1 < n_iters) {
        lag.values.noalias() = pde_tab.order_table(0) * sol.w;
        if (task.needs_lag_grads) {
          lag.grads.resize(task.n_input);
          std::vector<int> e(task.n_input, 0);
          for (int d = 0; d < task.n_input; ++d) {
            e.assign(task.n_input, 0);
            e[d] = 1;
            lag.grads[d].noalias() = pde_tab.derivative(e) * sol.w;
          }
        }
      }
      if (opts.lag_exit_tol >= 0 && iter > 0 &&
          std::abs(sol.lse - prev_lse) < opts.lag_exit_tol)
        break;
      prev_lse = sol.lse;
    }
    sol.mse = labels_mse(im, *layer_, task, sol.w);
    return sol;
  }

  // --- Path 3: direct assembly, lag loop rebuilding A as needed.
  Eigen::MatrixXd A_base = base_pde_matrix(im, *layer_, task);
  Eigen::MatrixXd A(n_rows, ntot);
  A.bottomRows(n_con) = con_rows;
  Eigen::MatrixXd b(n_rows, heads);
  b.bottomRows(n_con) = con_targets;
  const bool dual = n_rows < ntot;

  Eigen::LLT<Eigen::MatrixXd> llt;
  bool factored = false, llt_ok = false;
  LagField lag;
  double prev_lse = 0.0;
  for (int iter = 0; iter < n_iters; ++iter) {
    const LagField* lagp = iter == 0 ? nullptr : &lag;
    if (iter == 0 || lag_in_operator) {
      A.topRows(n_pde) = A_base;
      double pt[kMaxDim];
      LagRow row;
      for (const auto& term : task.lagged_terms) {
        Eigen::MatrixXd dmat = pde_tab.derivative(term.multi_index);
        for (Eigen::Index i = 0; i < n_pde; ++i) {
          load_point(*task.pde_points, i, pt);
          row.load(lagp, i, heads, task.n_input);
          const LagView view =
              make_view(heads, task.n_input, row.vals, row.grads);
          A.row(i) += term.coeff(pt, view) * dmat.row(i);
        }
      }
      factored = false;
    }
    b.topRows(n_pde) = b0;
    if (task.lagged_source) {
      double pt[kMaxDim];
      LagRow row;
      for (Eigen::Index i = 0; i < n_pde; ++i) {
        load_point(*task.pde_points, i, pt);
        row.load(lagp, i, heads, task.n_input);
        const LagView view = make_view(heads, task.n_input, row.vals, row.grads);
        for (int h = 0; h < heads; ++h)
          b(i, h) += task.lagged_source(h, pt, view);
      }
    }
    if (!factored) {
      const Eigen::Index s = dual ? n_rows : ntot;
      Eigen::MatrixXd M = Eigen::MatrixXd::Zero(s, s);
      if (dual)
        M.selfadjointView<Eigen::Lower>().rankUpdate(A);
      else
        M.selfadjointView<Eigen::Lower>().rankUpdate(A.transpose());
      M.diagonal().array() += lambda_;
      M = M.selfadjointView<Eigen::Lower>();
      llt.compute(M);
      llt_ok = llt.info() == Eigen::Success;
      factored = true;
    }
    bool ok = llt_ok;
    if (ok) {
      if (dual) {
        Eigen::MatrixXd z = llt.solve(b);
        sol.w.noalias() = A.transpose() * z;
        sol.lse = lambda_ * lambda_ * z.squaredNorm();
      } else {
        sol.w = llt.solve(A.transpose() * b);
        sol.lse = (A * sol.w - b).squaredNorm();
      }
      ok = sol.w.allFinite();
    }
    if (!ok) {
      sol.w = solve_ridge_multi(A, b, lambda_);
      sol.lse = (A * sol.w - b).squaredNorm();
    }
    sol.lag_history.push_back(sol.lse);
    if (task.nonlinear && iter + 1 < n_iters) {
      lag.values.noalias() = pde_tab.order_table(0) * sol.w;
      if (task.needs_lag_grads) {
        lag.grads.resize(task.n_input);
        std::vector<int> e(task.n_input, 0);
        for (int d = 0; d < task.n_input; ++d) {
          e.assign(task.n_input, 0);
          e[d] = 1;
          lag.grads[d].noalias() = pde_tab.derivative(e) * sol.w;
        }
      }
    }
    if (opts.lag_exit_tol >= 0 && iter > 0 &&
        std::abs(sol.lse - prev_lse) < opts.lag_exit_tol)
      break;
    prev_lse = sol.lse;
  }
  sol.mse = labels_mse(im, *layer_, task, sol.w);
  return sol;
}

Solution lifetime_learn(const Task& task, const HiddenLayer& layer,
                        double lambda, double row_weight_icbc,
                        const LearnOptions& opts) {
  BatchEvaluator ev(layer, lambda, row_weight_icbc);
  return ev.learn(task, opts);
}

}  // namespace bpinn
