// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "csmark/censoring.hpp"
#include "csmark/rng.hpp"

namespace csmark {

struct SimSpec {
  int n = 0;
  std::uint64_t seed = 0;
  double mix_weight = 0.3;

  void validate() const {
    if (n < 0) throw std::invalid_argument("sample size must be nonnegative");
    if (!(mix_weight >= 0.0) || !(mix_weight <= 1.0))
      throw std::invalid_argument("mix weight must lie in [0,1]");
  }
};

namespace detail {

/// Mixture event density on [0,1]x[0,2] with component (3/8)(u^2+v) and the
/// reflected component obtained by u -> 1-u.
inline double mixture_density(double x, double y, double mix_weight) {
  const double base = 0.375;  // 3/8
  const double a = x * x + y;
  const double b = (1.0 - x) * (1.0 - x) + y;
  return mix_weight * base * a + (1.0 - mix_weight) * base * b;
}

}  // namespace detail

/// The reference event-time/mark density: a 0.3/0.7 mixture of
/// (3/8)(u^2+v) and its reflection in u, supported on [0,1]x[0,2].
inline double f0_density(double x, double y) {
  if (x < 0.0 || x > 1.0 || y < 0.0 || y > 2.0)
    throw std::domain_error("point outside the reference density support");
  return detail::mixture_density(x, y, 0.3);
}

/// Marginal CDF of the mixture component's first coordinate:
/// F_U(u) = (u^3 + 3u)/4.
inline double event_marginal_cdf(double u) { return (u * u * u + 3.0 * u) * 0.25; }

/// Conditional CDF of the second coordinate given u:
/// F(v|u) = (u^2 v + v^2/2) / (2u^2 + 2) on [0,2].
inline double event_conditional_cdf(double v, double u) {
  return (u * u * v + 0.5 * v * v) / (2.0 * u * u + 2.0);
}

namespace detail {

/// Inverts the monotone cubic marginal CDF by a bracketed Newton/bisection
/// hybrid; the derivative is bounded below by 3/4 so |u - u*| <= (4/3)|f|.
inline double invert_event_marginal(double q) {
  double lo = 0.0;
  double hi = 1.0;
  double u = q;
  for (int it = 0; it < 100; ++it) {
    const double f = event_marginal_cdf(u) - q;
    if (std::abs(f) < 7.5e-13) return u;
    if (f > 0.0)
      hi = u;
    else
      lo = u;
    const double fprime = 0.75 * (u * u + 1.0);
    u -= f / fprime;
    if (!(u > lo) || !(u < hi)) u = 0.5 * (lo + hi);
  }
  throw std::runtime_error("marginal CDF inversion did not converge");
}

}  // namespace detail

/// Draws one event pair (x,y) by inverse-CDF sampling: numeric inverse of the
/// cubic marginal, closed-form (positive quadratic root) inverse of the
/// conditional, then the mixture flip u -> 1-u.
inline std::pair<double, double> sample_event(Rng& rng, double mix_weight = 0.3) {
  const double u = detail::invert_event_marginal(rng.uniform01());
  const double q = rng.uniform01();
  const double u2 = u * u;
  double v = -u2 + std::sqrt(u2 * u2 + 2.0 * q * (2.0 * u2 + 2.0));
  if (v > 2.0) v = 2.0;
  const double x = rng.uniform01() < mix_weight ? u : 1.0 - u;
  return {x, v};
}

/// Independent oracle for sample_event: accept/reject against a constant
/// envelope over the support.
inline std::pair<double, double> sample_event_rejection(Rng& rng,
                                                        double mix_weight = 0.3) {
  const double bound =
      0.375 * (std::max(mix_weight, 1.0 - mix_weight) + 2.0);  // sup of the density
  for (;;) {
    const double x = rng.uniform01();
    const double y = 2.0 * rng.uniform01();
    if (rng.uniform01() * bound <= detail::mixture_density(x, y, mix_weight))
      return {x, y};
  }
}

/// Inspection time with density t -> 2t on [0,1], i.e. T = sqrt(Uniform).
inline double sample_censoring(Rng& rng) { return std::sqrt(rng.uniform01()); }

/// One latent record: event time, mark, inspection time.
struct SimRecord {
  double x = 0.0;
  double y = 0.0;
  double t = 0.0;
};

inline std::vector<SimRecord> simulate_latent(const SimSpec& spec) {
  spec.validate();
  Rng rng(spec.seed, 0);
  std::vector<SimRecord> records;
  records.reserve(static_cast<std::size_t>(spec.n));
  for (int i = 0; i < spec.n; ++i) {
    const auto [x, y] = sample_event(rng, spec.mix_weight);
    records.push_back({x, y, sample_censoring(rng)});
  }
  return records;
}

inline Observation observe(const SimRecord& r) {
  return {r.t, r.x <= r.t ? r.y : 0.0};
}

/// Current-status observations of the latent records: z = y when the event
/// happened by the inspection time, else z = 0.
inline std::vector<Observation> simulate_dataset(const SimSpec& spec) {
  const auto latent = simulate_latent(spec);
  std::vector<Observation> data;
  data.reserve(latent.size());
  for (const auto& r : latent) data.push_back(observe(r));
  return data;
}

}  // namespace csmark
