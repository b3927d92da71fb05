// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "csmark/censoring.hpp"
#include "csmark/grid.hpp"
#include "csmark/laplacian.hpp"
#include "csmark/rng.hpp"

namespace csmark {

/// Prior on the smoothing scale tau: Exponential(rate), standard by default.
struct TauPrior {
  double rate = 1.0;

  double log_density(double tau) const {
    if (!(tau > 0.0)) return -std::numeric_limits<double>::infinity();
    return std::log(rate) - rate * tau;
  }
  double sample(Rng& rng) const { return rng.exponential(rate); }
};

struct ChainConfig {
  int iterations = 20000;
  double burnin_fraction = 1.0 / 3.0;
  double rho = 0.95;    // pCN autocorrelation parameter
  double delta = 0.1;   // log-normal step size of the tau proposal
  TauPrior tau_prior{};
  std::uint64_t seed = 0;
  int thin = 1;

  void validate() const {
    if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
    if (!(burnin_fraction > 0.0) || !(burnin_fraction < 1.0))
      throw std::invalid_argument("burnin_fraction must lie in (0,1)");
    if (!(rho >= 0.0) || !(rho < 1.0))
      throw std::invalid_argument("rho must lie in [0,1)");
    if (!(delta >= 0.0)) throw std::invalid_argument("delta must be >= 0");
    if (thin < 1) throw std::invalid_argument("thin must be >= 1");
    if (!(tau_prior.rate > 0.0))
      throw std::invalid_argument("tau prior rate must be positive");
  }
};

/// State of the non-centred chain: whitened coordinates and smoothing scale.
struct LatentState {
  std::vector<double> zvec;
  double tau = 1.0;
};

/// Chain results. theta draws are thinned and stored as 32-bit floats to
/// bound memory on fine grids; accept_z is the Gibbs theta-update rate for
/// the Dirichlet chain (identically 1, exact conditional draws).
struct ChainOutput {
  std::vector<std::vector<float>> theta_draws;
  std::vector<double> tau_trace;
  std::vector<double> zmean_trace;  // softmax translation-invariance monitor
  double accept_z = 0.0;
  double accept_tau = 0.0;
  BinWeights posterior_mean;
};

/// Componentwise average of the draws after discarding the initial burn-in
/// fraction; renormalised so the result is a valid probability vector.
inline BinWeights posterior_mean(std::span<const std::vector<float>> draws,
                                 double burnin_fraction) {
  if (!(burnin_fraction >= 0.0) || !(burnin_fraction < 1.0))
    throw std::invalid_argument("burnin_fraction must lie in [0,1)");
  const std::size_t n = draws.size();
  const std::size_t skip =
      static_cast<std::size_t>(std::floor(burnin_fraction * n + 1e-9));
  if (n == 0 || skip >= n)
    throw std::invalid_argument("no draws remain after burn-in");
  BinWeights mean;
  mean.theta.assign(draws[0].size(), 0.0);
  for (std::size_t i = skip; i < n; ++i)
    for (std::size_t l = 0; l < mean.theta.size(); ++l)
      mean.theta[l] += draws[i][l];
  for (double& v : mean.theta) v /= static_cast<double>(n - skip);
  mean.normalise();
  return mean;
}

namespace detail {

inline std::vector<float> to_float(const BinWeights& w) {
  return std::vector<float>(w.theta.begin(), w.theta.end());
}

inline double mean_of(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Chain-internal likelihood terms. For a censored observation (z = 0) the
/// shaded fraction is constant down each column, so theta^T a collapses to a
/// fraction-weighted sum of column masses; that turns a likelihood pass from
/// O(n p) into O(p + n (J + K)). Agrees with the generic sparse path to
/// floating-point roundoff (property-tested).
struct LikelihoodTerms {
  int j_bins = 1;
  int p = 1;
  std::vector<CensoringInfo> marked;  // z > 0: at most J entries each
  std::vector<std::vector<std::pair<int, double>>> censored;  // (column, fraction)
};

inline LikelihoodTerms build_likelihood_terms(const GridSpec& grid,
                                              std::span<const Observation> data) {
  LikelihoodTerms terms;
  terms.j_bins = grid.j_bins;
  terms.p = grid.p;
  for (const auto& obs : data) {
    if (obs.z > 0.0) {
      terms.marked.push_back(censoring_info(grid, obs));
    } else {
      if (obs.t < 0.0 || obs.t > grid.m1)
        throw std::domain_error("inspection time outside grid support");
      std::vector<std::pair<int, double>> cols;
      for (int j = 0; j < grid.j_bins; ++j) {
        const double frac = ((j + 1) * grid.dx - obs.t) / grid.dx;
        if (frac <= 0.0) continue;
        cols.emplace_back(j, frac >= 1.0 ? 1.0 : frac);
      }
      terms.censored.push_back(std::move(cols));
    }
  }
  return terms;
}

/// Log-likelihood through the compact terms; colsum is scratch of size J.
inline double loglik_terms(const BinWeights& w, const LikelihoodTerms& terms,
                           std::vector<double>& colsum) {
  colsum.assign(static_cast<std::size_t>(terms.j_bins), 0.0);
  for (int l = 0; l < terms.p; ++l)
    colsum[static_cast<std::size_t>(l % terms.j_bins)] += w.theta[static_cast<std::size_t>(l)];
  double ll = 0.0;
  for (const auto& info : terms.marked) {
    const double dot = sparse_dot(w, info);
    if (!(dot > 0.0)) return -std::numeric_limits<double>::infinity();
    ll += std::log(dot);
  }
  for (const auto& cols : terms.censored) {
    double dot = 0.0;
    for (const auto& [j, frac] : cols) dot += colsum[static_cast<std::size_t>(j)] * frac;
    if (!(dot > 0.0)) return -std::numeric_limits<double>::infinity();
    ll += std::log(dot);
  }
  return ll;
}

/// pCN update with cached log-likelihood. The acceptance ratio is the
/// likelihood ratio alone: the proposal preserves the standard-normal
/// reference measure, so prior and proposal densities cancel.
template <typename LikFn>
bool pcn_update(LatentState& state, double& ll, BinWeights& theta,
                const ChainConfig& cfg, LikFn&& lik, const GridLaplacian& lap,
                Rng& rng) {
  const double rho = cfg.rho;
  const double innov = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  std::vector<double> zprop(state.zvec.size());
  for (std::size_t i = 0; i < zprop.size(); ++i)
    zprop[i] = rho * state.zvec[i] + innov * rng.normal();
  BinWeights tprop = theta_from_latent(lap, zprop, state.tau);
  const double llprop = lik(tprop);
  if (std::log(rng.uniform01()) < llprop - ll) {
    state.zvec = std::move(zprop);
    theta = std::move(tprop);
    ll = llprop;
    return true;
  }
  return false;
}

/// Random-walk update of log tau with cached log-likelihood; the tau'/tau
/// factor is the Jacobian of the log transform.
template <typename LikFn>
bool tau_update_lngl(LatentState& state, double& ll, BinWeights& theta,
                     const ChainConfig& cfg, LikFn&& lik,
                     const GridLaplacian& lap, Rng& rng) {
  const double tprop = state.tau * std::exp(cfg.delta * rng.normal());
  if (!(tprop > 0.0) || !std::isfinite(tprop)) return false;
  BinWeights thprop = theta_from_latent(lap, state.zvec, tprop);
  const double llprop = lik(thprop);
  const double logratio = (llprop - ll) +
                          (cfg.tau_prior.log_density(tprop) -
                           cfg.tau_prior.log_density(state.tau)) +
                          (std::log(tprop) - std::log(state.tau));
  if (std::log(rng.uniform01()) < logratio) {
    state.tau = tprop;
    theta = std::move(thprop);
    ll = llprop;
    return true;
  }
  return false;
}

}  // namespace detail

struct StepResult {
  LatentState state;
  bool accepted = false;
};

/// One pCN step: z' = rho z + sqrt(1-rho^2) w, accepted with probability
/// 1 ^ L(z',tau)/L(z,tau). tau is unchanged. rho == 1 (identity proposal) is
/// tolerated for testing even though ChainConfig forbids it for runs.
inline StepResult pcn_step(const LatentState& state, const ChainConfig& cfg,
                           std::span<const CensoringInfo> infos,
                           const GridLaplacian& lap, Rng& rng) {
  LatentState st = state;
  BinWeights theta = theta_from_latent(lap, st.zvec, st.tau);
  auto lik = [&](const BinWeights& w) { return loglik(w, infos); };
  double ll = lik(theta);
  const bool acc = detail::pcn_update(st, ll, theta, cfg, lik, lap, rng);
  return {std::move(st), acc};
}

/// One Metropolis-Hastings step for tau with log tau' ~ N(log tau, delta^2);
/// acceptance 1 ^ [L(z,tau')/L(z,tau)] [pi(tau')/pi(tau)] [tau'/tau].
inline StepResult tau_step_lngl(const LatentState& state, const ChainConfig& cfg,
                                std::span<const CensoringInfo> infos,
                                const GridLaplacian& lap, Rng& rng) {
  LatentState st = state;
  BinWeights theta = theta_from_latent(lap, st.zvec, st.tau);
  auto lik = [&](const BinWeights& w) { return loglik(w, infos); };
  double ll = lik(theta);
  const bool acc = detail::tau_update_lngl(st, ll, theta, cfg, lik, lap, rng);
  return {std::move(st), acc};
}

/// Non-centred Gibbs sampler for the graph-Laplacian prior: each sweep
/// updates tau, then z. Deterministic given (seed, config, data).
inline ChainOutput run_lngl_chain(const ChainConfig& cfg, const GridSpec& grid,
                                  std::span<const Observation> data) {
  cfg.validate();
  const auto terms = detail::build_likelihood_terms(grid, data);
  std::vector<double> colsum;
  auto lik = [&](const BinWeights& w) {
    return detail::loglik_terms(w, terms, colsum);
  };
  GridLaplacian lap = build_laplacian(grid);
  build_precision(lap);

  Rng rng(cfg.seed, 0);
  LatentState st;
  st.tau = cfg.tau_prior.sample(rng);
  st.zvec.resize(static_cast<std::size_t>(grid.p));
  for (double& v : st.zvec) v = rng.normal();
  BinWeights theta = theta_from_latent(lap, st.zvec, st.tau);
  double ll = lik(theta);

  ChainOutput out;
  out.tau_trace.reserve(static_cast<std::size_t>(cfg.iterations));
  out.zmean_trace.reserve(static_cast<std::size_t>(cfg.iterations));
  long acc_z = 0;
  long acc_tau = 0;
  for (int it = 0; it < cfg.iterations; ++it) {
    acc_tau += detail::tau_update_lngl(st, ll, theta, cfg, lik, lap, rng);
    acc_z += detail::pcn_update(st, ll, theta, cfg, lik, lap, rng);
    out.tau_trace.push_back(st.tau);
    out.zmean_trace.push_back(detail::mean_of(st.zvec));
    if ((it + 1) % cfg.thin == 0) out.theta_draws.push_back(detail::to_float(theta));
  }
  out.accept_z = static_cast<double>(acc_z) / cfg.iterations;
  out.accept_tau = static_cast<double>(acc_tau) / cfg.iterations;
  out.posterior_mean = posterior_mean(out.theta_draws, cfg.burnin_fraction);
  return out;
}

/// Latent-bin imputation of the data-augmentation scheme: for each
/// observation one cell is drawn with probability proportional to
/// theta_l * fraction_l over its shaded cells.
inline std::vector<int> impute_bins(const BinWeights& w,
                                    std::span<const CensoringInfo> infos,
                                    Rng& rng) {
  std::vector<int> counts(w.size(), 0);
  for (const auto& info : infos) {
    const double total = sparse_dot(w, info);
    if (!(total > 0.0))
      throw std::runtime_error(
          "imputation impossible: observation carries zero mass under theta");
    const double u = rng.uniform01() * total;
    double c = 0.0;
    int chosen = info.entries.back().first;
    for (const auto& [l, frac] : info.entries) {
      c += w.theta[static_cast<std::size_t>(l)] * frac;
      if (u <= c) {
        chosen = l;
        break;
      }
    }
    ++counts[static_cast<std::size_t>(chosen)];
  }
  return counts;
}

/// Conjugate update given imputed counts: theta ~ Dirichlet(tau+C_1,...,tau+C_p),
/// drawn via normalised Gamma variables. Draws are clamped away from exact
/// zero (at 1e-300) so the Dirichlet density of the tau step stays defined.
inline BinWeights dirichlet_update(std::span<const int> counts, double tau,
                                   Rng& rng) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  BinWeights w;
  w.theta.resize(counts.size());
  double sum = 0.0;
  for (std::size_t l = 0; l < counts.size(); ++l) {
    if (counts[l] < 0) throw std::invalid_argument("counts must be nonnegative");
    double gdraw = rng.gamma(tau + counts[l]);
    if (gdraw < 1e-300) gdraw = 1e-300;
    w.theta[l] = gdraw;
    sum += gdraw;
  }
  for (double& v : w.theta) v /= sum;
  return w;
}

/// Log density of the symmetric Dirichlet(tau,...,tau) at theta.
inline double dirichlet_symmetric_logpdf(const BinWeights& w, double tau) {
  const double p = static_cast<double>(w.size());
  double slog = 0.0;
  for (double v : w.theta) {
    if (!(v > 0.0))
      throw std::domain_error("Dirichlet density undefined at a zero component");
    slog += std::log(v);
  }
  return std::lgamma(p * tau) - p * std::lgamma(tau) + (tau - 1.0) * slog;
}

namespace detail {

/// tau step given the precomputed sum of log theta components.
inline std::pair<double, bool> tau_update_dirichlet(double slog, double p,
                                                    double tau,
                                                    const ChainConfig& cfg,
                                                    Rng& rng) {
  const double tprop = tau * std::exp(cfg.delta * rng.normal());
  if (!(tprop > 0.0) || !std::isfinite(tprop)) return {tau, false};
  auto logpdf = [&](double t) {
    return std::lgamma(p * t) - p * std::lgamma(t) + (t - 1.0) * slog;
  };
  const double logratio = logpdf(tprop) - logpdf(tau) +
                          cfg.tau_prior.log_density(tprop) -
                          cfg.tau_prior.log_density(tau) +
                          std::log(tprop) - std::log(tau);
  if (std::log(rng.uniform01()) < logratio) return {tprop, true};
  return {tau, false};
}

inline double sum_log(const BinWeights& w) {
  double slog = 0.0;
  for (double v : w.theta) {
    if (!(v > 0.0))
      throw std::domain_error("Dirichlet density undefined at a zero component");
    slog += std::log(v);
  }
  return slog;
}

}  // namespace detail

/// Metropolis-Hastings step for tau in the Dirichlet chain. The target is
/// pi(tau) * Dirichlet(theta; tau,...,tau); the acceptance ratio carries the
/// Gamma(p tau)/Gamma(tau)^p normaliser ratio, the (tau'-tau) sum log theta
/// term, the prior ratio and the tau'/tau Jacobian.
inline std::pair<double, bool> tau_step_dirichlet(const BinWeights& w, double tau,
                                                  const ChainConfig& cfg,
                                                  Rng& rng) {
  return detail::tau_update_dirichlet(detail::sum_log(w),
                                      static_cast<double>(w.size()), tau, cfg,
                                      rng);
}

/// Data-augmentation sampler for the Dirichlet prior: each sweep imputes
/// latent cells, draws theta from its conjugate conditional, then updates tau.
inline ChainOutput run_dirichlet_chain(const ChainConfig& cfg,
                                       const GridSpec& grid,
                                       std::span<const Observation> data) {
  cfg.validate();
  const auto infos = censoring_infos(grid, data);

  Rng rng(cfg.seed, 0);
  double tau = cfg.tau_prior.sample(rng);
  const std::vector<int> zero_counts(static_cast<std::size_t>(grid.p), 0);
  BinWeights theta = dirichlet_update(zero_counts, tau, rng);

  ChainOutput out;
  out.tau_trace.reserve(static_cast<std::size_t>(cfg.iterations));
  long acc_tau = 0;
  for (int it = 0; it < cfg.iterations; ++it) {
    const auto counts = impute_bins(theta, infos, rng);
    theta = dirichlet_update(counts, tau, rng);
    auto [tnew, acc] = detail::tau_update_dirichlet(
        detail::sum_log(theta), static_cast<double>(grid.p), tau, cfg, rng);
    tau = tnew;
    acc_tau += acc;
    out.tau_trace.push_back(tau);
    if ((it + 1) % cfg.thin == 0) out.theta_draws.push_back(detail::to_float(theta));
  }
  out.accept_z = 1.0;  // theta updates are exact conditional draws
  out.accept_tau = static_cast<double>(acc_tau) / cfg.iterations;
  out.posterior_mean = posterior_mean(out.theta_draws, cfg.burnin_fraction);
  return out;
}

/// Pilot-run tuning: short chains over a (rho, delta) candidate grid, keeping
/// the pair whose acceptance rates land in [0.25, 0.5] closest to 0.375.
struct TuneResult {
  double rho = 0.95;
  double delta = 0.1;
  double accept_z = 0.0;
  double accept_tau = 0.0;
  bool within_target = false;
};

namespace detail {

inline double tune_score(double az, double at) {
  return std::abs(az - 0.375) + std::abs(at - 0.375);
}

}  // namespace detail

inline TuneResult tune_lngl(const ChainConfig& base, const GridSpec& grid,
                            std::span<const Observation> data,
                            int pilot_iterations = 1500) {
  static const double rhos[] = {0.998, 0.995, 0.99, 0.98, 0.95, 0.9, 0.8, 0.6};
  static const double deltas[] = {0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2};
  TuneResult best;
  double best_score = std::numeric_limits<double>::infinity();
  for (double rho : rhos) {
    for (double delta : deltas) {
      ChainConfig cfg = base;
      cfg.iterations = pilot_iterations;
      cfg.rho = rho;
      cfg.delta = delta;
      cfg.thin = pilot_iterations;  // draws are irrelevant here
      const ChainOutput out = run_lngl_chain(cfg, grid, data);
      const bool ok = out.accept_z >= 0.25 && out.accept_z <= 0.5 &&
                      out.accept_tau >= 0.25 && out.accept_tau <= 0.5;
      const double score = detail::tune_score(out.accept_z, out.accept_tau) +
                           (ok ? 0.0 : 10.0);
      if (score < best_score) {
        best_score = score;
        best = {rho, delta, out.accept_z, out.accept_tau, ok};
      }
    }
  }
  return best;
}

inline TuneResult tune_dirichlet(const ChainConfig& base, const GridSpec& grid,
                                 std::span<const Observation> data,
                                 int pilot_iterations = 1500) {
  static const double deltas[] = {0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2};
  TuneResult best;
  double best_score = std::numeric_limits<double>::infinity();
  for (double delta : deltas) {
    ChainConfig cfg = base;
    cfg.iterations = pilot_iterations;
    cfg.delta = delta;
    cfg.thin = pilot_iterations;
    const ChainOutput out = run_dirichlet_chain(cfg, grid, data);
    const bool ok = out.accept_tau >= 0.25 && out.accept_tau <= 0.5;
    const double score = std::abs(out.accept_tau - 0.375) + (ok ? 0.0 : 10.0);
    if (score < best_score) {
      best_score = score;
      best = {0.0, delta, out.accept_z, out.accept_tau, ok};
    }
  }
  return best;
}

}  // namespace csmark
