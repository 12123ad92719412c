#include "fadegp/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>

#include "fadegp/errors.hpp"
#include "fadegp/normal.hpp"

namespace fadegp {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();
constexpr double pos_inf = std::numeric_limits<double>::infinity();

double log_sum_exp(double a, double b) {
  if (a == neg_inf) return b;
  if (b == neg_inf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Nesterov dual averaging on log step size (standard gamma/t0/kappa values).
struct DualAveraging {
  double mu = 0.0, log_eps = 0.0, log_eps_bar = 0.0, h_bar = 0.0;
  int m = 0;

  void restart(double eps0) {
    mu = std::log(10.0 * eps0);
    log_eps = std::log(eps0);
    log_eps_bar = std::log(eps0);
    h_bar = 0.0;
    m = 0;
  }
  void update(double accept, double target) {
    ++m;
    const double gamma = 0.05, t0 = 10.0, kappa = 0.75;
    h_bar = (1.0 - 1.0 / (m + t0)) * h_bar + (target - accept) / (m + t0);
    log_eps = mu - std::sqrt(static_cast<double>(m)) / gamma * h_bar;
    const double w = std::pow(static_cast<double>(m), -kappa);
    log_eps_bar = w * log_eps + (1.0 - w) * log_eps_bar;
  }
  double current() const { return std::exp(log_eps); }
  double averaged() const { return std::exp(log_eps_bar); }
};

struct Welford {
  Index n = 0;
  bool dense = false;
  Vector mean, m2;
  Matrix m2d;
  void init(Index dim, bool dense_mode) {
    n = 0;
    dense = dense_mode;
    mean = Vector::Zero(dim);
    m2 = Vector::Zero(dim);
    if (dense) m2d = Matrix::Zero(dim, dim);
  }
  void add(const Vector& x) {
    ++n;
    Vector d = x - mean;
    mean += d / static_cast<double>(n);
    Vector d2 = x - mean;
    if (dense) m2d += d * d2.transpose();
    m2 += d.cwiseProduct(d2);
  }
  Vector variance() const {
    if (n < 2) return Vector::Ones(mean.size());
    return m2 / static_cast<double>(n - 1);
  }
  Matrix covariance() const {
    if (n < 2) return Matrix::Identity(mean.size(), mean.size());
    Matrix c = m2d / static_cast<double>(n - 1);
    return 0.5 * (c + c.transpose());
  }
};

struct Phase {
  Vector q, p, grad;
  double logp = neg_inf;
};

struct Tree {
  Phase minus, plus;
  Phase prop;  // multinomial proposal; carries its own logp and gradient
  double log_w = neg_inf;
  double sum_accept = 0.0;
  long n_leaves = 0;
  bool divergent = false;
  bool turning = false;
};

class ChainRunner {
 public:
  ChainRunner(const TargetFn& target, Index dim, const SamplerConfig& cfg, Rng rng)
      : target_(target), dim_(dim), cfg_(cfg), rng_(rng) {
    inv_mass_ = Vector::Ones(dim);
    dense_ = cfg.dense_metric && dim >= 2;
    if (dense_) {
      sigma_ = Matrix::Identity(dim, dim);
      sigma_chol_ = Matrix::Identity(dim, dim);
    }
  }

  void run(const InitFn& init, Matrix& out_draws, ChainStats& out_stats) {
    Phase z = initialize(init);
    adapt(z);
    out_draws.resize(cfg_.samples, dim_);
    double accept_sum = 0.0;
    int divergences = 0, depth_hits = 0;
    for (int s = 0; s < cfg_.samples; ++s) {
      IterResult r = transition(z, eps_);
      accept_sum += r.accept_stat;
      divergences += r.divergent ? 1 : 0;
      depth_hits += r.max_depth ? 1 : 0;
      out_draws.row(s) = z.q.transpose();
    }
    out_stats.mean_accept = cfg_.samples > 0 ? accept_sum / cfg_.samples : 0.0;
    out_stats.divergences = divergences;
    out_stats.max_depth_hits = depth_hits;
    out_stats.step_size = eps_;
    out_stats.inv_mass = dense_ ? Vector(sigma_.diagonal()) : inv_mass_;
  }

 private:
  struct IterResult {
    double accept_stat = 0.0;
    bool divergent = false;
    bool max_depth = false;
  };

  Phase initialize(const InitFn& init) {
    for (int attempt = 0; attempt < cfg_.max_init_retries; ++attempt) {
      Phase z;
      if (init) {
        z.q = init(rng_);
      } else {
        z.q.resize(dim_);
        for (Index j = 0; j < dim_; ++j) z.q[j] = draw_normal(rng_);
      }
      if (z.q.size() != dim_) throw ValidationError("sampler: init point has wrong dimension");
      z.grad.resize(dim_);
      z.logp = target_(z.q, z.grad);
      if (std::isfinite(z.logp) && z.grad.allFinite()) return z;
    }
    throw ConvergenceError("sampler: no finite-density starting point after " +
                           std::to_string(cfg_.max_init_retries) + " attempts");
  }

  // Velocity dq/dt = M^{-1} p under the current metric.
  Vector vel(const Vector& p) const {
    return dense_ ? Vector(sigma_ * p) : Vector(inv_mass_.cwiseProduct(p));
  }

  double kinetic(const Vector& p) const { return 0.5 * p.dot(vel(p)); }

  Vector draw_momentum() {
    Vector xi(dim_);
    for (Index j = 0; j < dim_; ++j) xi[j] = draw_normal(rng_);
    if (!dense_) return (xi.array() / inv_mass_.array().sqrt()).matrix();
    // p ~ N(0, Sigma^{-1}) via the upper-triangular solve with Sigma = L L^T.
    return sigma_chol_.transpose().triangularView<Eigen::Upper>().solve(xi);
  }

  // One signed leapfrog step; logp and grad are kept current.
  void leapfrog(Phase& z, double signed_eps) const {
    z.p += 0.5 * signed_eps * z.grad;
    z.q += signed_eps * vel(z.p);
    z.logp = target_(z.q, z.grad);
    z.p += 0.5 * signed_eps * z.grad;
  }

  double hamiltonian(const Phase& z) const {
    return std::isfinite(z.logp) ? -z.logp + kinetic(z.p) : pos_inf;
  }

  bool uturn(const Phase& minus, const Phase& plus) const {
    const Vector span = plus.q - minus.q;
    return span.dot(vel(minus.p)) < 0.0 || span.dot(vel(plus.p)) < 0.0;
  }

  double find_reasonable_eps(const Phase& z0) {
    double eps = 1.0;
    Phase z = z0;
    z.p = draw_momentum();
    const double h0 = hamiltonian(z);
    Phase trial = z;
    leapfrog(trial, eps);
    double ratio = std::exp(h0 - hamiltonian(trial));
    const double dir = ratio > 0.5 ? 1.0 : -1.0;
    for (int it = 0; it < 60; ++it) {
      if (dir > 0.0 && !(ratio > 0.5)) break;
      if (dir < 0.0 && !(ratio < 0.5)) break;
      eps *= dir > 0.0 ? 2.0 : 0.5;
      if (eps > 1e7 || eps < 1e-10) break;
      trial = z;
      leapfrog(trial, eps);
      ratio = std::exp(h0 - hamiltonian(trial));
    }
    return std::clamp(eps, 1e-10, 1e7);
  }

  Tree leaf(Phase z, double signed_eps, double h0) const {
    Tree t;
    leapfrog(z, signed_eps);
    const double h = hamiltonian(z);
    const double dh = h - h0;
    t.divergent = !(dh < cfg_.divergence_threshold);
    t.sum_accept = std::isfinite(dh) ? std::min(1.0, std::exp(-dh)) : 0.0;
    t.n_leaves = 1;
    t.log_w = std::isfinite(h) ? -h : neg_inf;
    t.prop = z;
    t.minus = z;
    t.plus = std::move(z);
    return t;
  }

  Tree build_tree(const Phase& from, int depth, double signed_eps, double h0) {
    if (depth == 0) return leaf(from, signed_eps, h0);
    Tree first = build_tree(from, depth - 1, signed_eps, h0);
    if (first.divergent || first.turning) return first;
    const Phase& edge = signed_eps > 0.0 ? first.plus : first.minus;
    Tree second = build_tree(edge, depth - 1, signed_eps, h0);
    Tree merged;
    merged.minus = signed_eps > 0.0 ? first.minus : second.minus;
    merged.plus = signed_eps > 0.0 ? second.plus : first.plus;
    merged.log_w = log_sum_exp(first.log_w, second.log_w);
    merged.sum_accept = first.sum_accept + second.sum_accept;
    merged.n_leaves = first.n_leaves + second.n_leaves;
    merged.divergent = second.divergent;
    // Uniform multinomial choice between the two halves.
    const double p_second = std::exp(second.log_w - merged.log_w);
    merged.prop = (draw_uniform(rng_) < p_second) ? second.prop : first.prop;
    merged.turning = second.turning || uturn(merged.minus, merged.plus);
    return merged;
  }

  IterResult transition(Phase& z, double eps) {
    if (!cfg_.nuts) return static_transition(z, eps);
    IterResult res;
    z.p = draw_momentum();
    const double h0 = hamiltonian(z);
    Tree tree;
    tree.minus = z;
    tree.plus = z;
    tree.prop = z;
    tree.log_w = -h0;
    double sum_accept = 0.0;
    long n_leaves = 0;
    bool exhausted = true;
    for (int depth = 0; depth < cfg_.max_treedepth; ++depth) {
      const double dir = draw_uniform(rng_) < 0.5 ? -1.0 : 1.0;
      const Phase& edge = dir > 0.0 ? tree.plus : tree.minus;
      Tree sub = build_tree(edge, depth, dir * eps, h0);
      sum_accept += sub.sum_accept;
      n_leaves += sub.n_leaves;
      if (sub.divergent) {
        res.divergent = true;
        exhausted = false;
        break;
      }
      if (sub.turning) { exhausted = false; break; }
      // Biased progressive sampling: favor the fresh subtree.
      const double p_new = std::exp(sub.log_w - tree.log_w);
      if (draw_uniform(rng_) < p_new) tree.prop = sub.prop;
      tree.log_w = log_sum_exp(tree.log_w, sub.log_w);
      if (dir > 0.0) tree.plus = sub.plus; else tree.minus = sub.minus;
      if (uturn(tree.minus, tree.plus)) { exhausted = false; break; }
    }
    res.max_depth = exhausted;
    res.accept_stat = n_leaves > 0 ? sum_accept / static_cast<double>(n_leaves) : 0.0;
    z.q = tree.prop.q;
    z.grad = tree.prop.grad;
    z.logp = tree.prop.logp;
    return res;
  }

  IterResult static_transition(Phase& z, double eps) {
    IterResult res;
    Phase trial = z;
    trial.p = draw_momentum();
    const double h0 = hamiltonian(trial);
    bool bad = false;
    for (int l = 0; l < cfg_.static_steps; ++l) {
      leapfrog(trial, eps);
      if (!std::isfinite(trial.logp)) { bad = true; break; }
    }
    const double dh = bad ? pos_inf : hamiltonian(trial) - h0;
    res.divergent = !(dh < cfg_.divergence_threshold);
    const double accept = std::isfinite(dh) ? std::min(1.0, std::exp(-dh)) : 0.0;
    res.accept_stat = accept;
    if (draw_uniform(rng_) < accept) {
      trial.p.resize(0);
      z = std::move(trial);
    }
    return res;
  }

  void adapt(Phase& z) {
    const int warm = cfg_.warmup;
    DualAveraging da;
    da.restart(find_reasonable_eps(z));
    if (warm < 20) {
      for (int s = 0; s < warm; ++s) {
        IterResult r = transition(z, da.current());
        da.update(r.accept_stat, cfg_.target_accept);
      }
      eps_ = warm > 0 ? da.averaged() : da.current();
      return;
    }
    // Expanding variance windows between an eps-only head and tail. A single
    // window is not enough here: until the metric knows the wide hyper
    // directions, the barrier-limited step size keeps them nearly frozen, so
    // their first variance estimate comes out tiny and would pin them
    // permanently. Re-estimating over doubling windows lets slow coordinates
    // speed up geometrically.
    int head = 75, tail = 50, base_win = 25;
    if (warm < head + base_win + tail) {
      head = std::max(1, (15 * warm) / 100);
      tail = std::max(1, warm / 10);
      base_win = std::max(1, warm - head - tail);
    }
    const int last = warm - tail;
    std::vector<int> window_ends;
    for (int start = head, size = base_win; start < last; size *= 2) {
      int end = start + size;
      if (end + 2 * size > last) end = last;  // absorb a tail too short to double
      window_ends.push_back(std::min(end, last));
      start = window_ends.back();
    }
    Welford wf;
    wf.init(dim_, dense_);
    std::size_t w = 0;
    for (int s = 0; s < warm; ++s) {
      IterResult r = transition(z, da.current());
      da.update(r.accept_stat, cfg_.target_accept);
      if (s >= head && s < last) wf.add(z.q);
      if (w < window_ends.size() && s + 1 == window_ends[w]) {
        if (wf.n >= 5) update_metric(wf);
        wf.init(dim_, dense_);
        da.restart(find_reasonable_eps(z));
        ++w;
      }
    }
    eps_ = da.averaged();
  }

  // Shrinkage toward a small multiple of the identity keeps the estimate
  // positive definite when the window is shorter than the dimension.
  void update_metric(const Welford& wf) {
    const double n = static_cast<double>(wf.n);
    const double keep = n / (n + 5.0), pad = 1e-3 * (5.0 / (n + 5.0));
    if (!dense_) {
      inv_mass_ = (keep * wf.variance().array() + pad).matrix();
      return;
    }
    Matrix sigma = keep * wf.covariance();
    sigma.diagonal().array() += pad;
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success) return;  // keep the previous metric
    sigma_ = std::move(sigma);
    sigma_chol_ = llt.matrixL();
  }

  const TargetFn& target_;
  Index dim_;
  SamplerConfig cfg_;
  Rng rng_;
  bool dense_ = false;
  Vector inv_mass_;          // diagonal inverse metric
  Matrix sigma_, sigma_chol_;  // dense inverse metric and its lower factor
  double eps_ = 1.0;
};

}  // namespace

int PosteriorDraws::total_divergences() const {
  int n = 0;
  for (const auto& s : stats) n += s.divergences;
  return n;
}

double PosteriorDraws::max_rhat() const { return rhat.size() ? rhat.maxCoeff() : 0.0; }

double PosteriorDraws::min_ess() const { return ess.size() ? ess.minCoeff() : 0.0; }

Matrix PosteriorDraws::stacked() const {
  const Index s = n_samples(), p = n_params();
  Matrix out(s * n_chains(), p);
  for (Index c = 0; c < n_chains(); ++c) out.middleRows(c * s, s) = chains[c];
  return out;
}

PosteriorDraws run_sampler(const TargetFn& target, Index dim, const SamplerConfig& cfg,
                           const InitFn& init) {
  if (dim < 1) throw ValidationError("sampler: dimension must be positive");
  if (cfg.chains < 1) throw ValidationError("sampler: need at least one chain");
  if (cfg.samples < 1) throw ValidationError("sampler: need at least one sample");
  if (cfg.warmup < 0) throw ValidationError("sampler: warmup must be non-negative");
  if (!(cfg.target_accept > 0.0 && cfg.target_accept < 1.0)) {
    throw ValidationError("sampler: target acceptance must lie in (0, 1)");
  }

  PosteriorDraws out;
  out.chains.resize(cfg.chains);
  out.stats.resize(cfg.chains);
  std::vector<std::exception_ptr> errors(cfg.chains);

#pragma omp parallel for schedule(static, 1) if (cfg.parallel_chains)
  for (int c = 0; c < cfg.chains; ++c) {
    try {
      ChainRunner runner(target, dim, cfg, make_rng(cfg.seed, static_cast<std::uint64_t>(c)));
      runner.run(init, out.chains[c], out.stats[c]);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  out.rhat = split_rhat(out.chains);
  out.ess = ess_bulk(out.chains);
  return out;
}

}  // namespace fadegp
