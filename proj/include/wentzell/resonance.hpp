#pragma once

// Computable solvability test for the resonant problem.  The total data mean
//
//   M = int_Omega f dx + int_bdry g dsigma/b
//
// admits a solution exactly when it lies in the interval
//
//   I = lambda1 * R(alpha1) + lambda2 * R(alpha2),
//
// where lambda1 = |Omega|, lambda2 = int_bdry dsigma/b, and R(alpha) is the
// range of the density: strictly inside is sufficient, outside the closure
// rules a solution out, and the endpoints are genuinely undecided.  This
// header computes the interval with explicit openness bookkeeping, classifies
// means against it with a floating-point ambiguity band, and constructs the
// canonical constant split used to seed the resonant solver.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "wentzell/common.hpp"
#include "wentzell/domain.hpp"
#include "wentzell/forms.hpp"
#include "wentzell/orlicz.hpp"

namespace wentzell::resonance {

struct NotStrictlySolvable : Error {
  using Error::Error;
};

enum class Classification { StrictlySolvable, BoundaryCase, Unsolvable };

inline const char* classification_name(Classification c) {
  switch (c) {
    case Classification::StrictlySolvable: return "StrictlySolvable";
    case Classification::BoundaryCase: return "BoundaryCase";
    default: return "Unsolvable";
  }
}

struct SolvabilityVerdict {
  double mean_total = 0.0;
  orlicz::RangeInterval interval;
  Classification classification = Classification::Unsolvable;
};

// Range of the density: the declared interval when the NFunction carries one,
// or a fresh numeric estimate from the raw density.
inline orlicz::RangeInterval range_interval(const orlicz::NFunction& nf) { return nf.range; }

inline orlicz::RangeInterval range_interval(const orlicz::ScalarFn& alpha,
                                            bool strictly_increasing) {
  return orlicz::estimate_range(alpha, strictly_increasing);
}

// t * [lo, hi] for a positive scale factor (measures are always positive).
inline orlicz::RangeInterval scale_interval(orlicz::RangeInterval I, double t) {
  if (!(t > 0)) throw BadParameter("interval scale factor must be positive");
  return orlicz::RangeInterval{t * I.lo, t * I.hi, I.lo_open, I.hi_open};
}

// A + B with openness propagation: an endpoint of the sum is open as soon as
// either contributing endpoint is open; infinite endpoints stay flagged open.
inline orlicz::RangeInterval minkowski_sum(orlicz::RangeInterval A, orlicz::RangeInterval B) {
  orlicz::RangeInterval r;
  r.lo = A.lo + B.lo;
  r.hi = A.hi + B.hi;
  r.lo_open = A.lo_open || B.lo_open || std::isinf(r.lo);
  r.hi_open = A.hi_open || B.hi_open || std::isinf(r.hi);
  return r;
}

// Relative ambiguity band around an endpoint: membership exactly at an
// endpoint is not numerically decidable, so a band of relative width 1e-9 is
// classified BoundaryCase.
inline double boundary_band(double endpoint) {
  return 1e-9 * std::max(1.0, std::abs(endpoint));
}

inline Classification classify(double mean, const orlicz::RangeInterval& I) {
  if (std::isfinite(I.lo) && std::abs(mean - I.lo) <= boundary_band(I.lo))
    return Classification::BoundaryCase;
  if (std::isfinite(I.hi) && std::abs(mean - I.hi) <= boundary_band(I.hi))
    return Classification::BoundaryCase;
  const bool above_lo = !std::isfinite(I.lo) || mean > I.lo;
  const bool below_hi = !std::isfinite(I.hi) || mean < I.hi;
  return above_lo && below_hi ? Classification::StrictlySolvable : Classification::Unsolvable;
}

inline SolvabilityVerdict solvability(const forms::ProblemSpec& spec) {
  if (spec.mode != forms::Mode::Resonant)
    throw forms::BadMode("solvability test requires Resonant mode");
  forms::check_spec(spec);
  const auto m = domain::measures(spec.dom);
  SolvabilityVerdict v;
  v.mean_total = domain::integrate_pair(spec.dom, spec.f, spec.g);
  v.interval = minkowski_sum(scale_interval(spec.alpha1.range, m.lambda1),
                             scale_interval(spec.alpha2.range, m.lambda2));
  v.classification = classify(v.mean_total, v.interval);
  return v;
}

// One CSV row: mean_total, lo, hi, lo_open, hi_open, classification.
inline std::string verdict_csv_row(const SolvabilityVerdict& v) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%d,%d,", v.mean_total, v.interval.lo,
                v.interval.hi, v.interval.lo_open ? 1 : 0, v.interval.hi_open ? 1 : 0);
  return std::string(buf) + classification_name(v.classification);
}

// Preimage of c under the density: bracket by doubling, then bisect.  c = 0
// always maps to 0 (densities are odd with alpha(0) = 0); for flat stretches
// the smallest-magnitude preimage is returned.
inline double invert_density(const orlicz::NFunction& nf, double c) {
  if (c == 0.0) return 0.0;
  if (c < 0.0) return -invert_density(nf, -c);
  double hi = 1.0;
  while (nf.alpha(hi) < c) {
    hi *= 2.0;
    if (hi > 1e13) throw BadParameter("density preimage: value outside attainable range");
  }
  double lo = 0.0;
  for (int i = 0; i < 200 && hi - lo > 1e-16 * (1.0 + hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (nf.alpha(mid) < c ? lo : hi) = mid;
  }
  return hi;
}

struct SplitMean {
  double c1 = 0.0, c2 = 0.0;  // constants with lambda1*c1 + lambda2*c2 = mean
  double d1 = 0.0, d2 = 0.0;  // preimages alpha_j(d_j) = c_j
};

// Canonical split of the mean across the two ranges.  Preference order:
// the proportional point c1 = c2 = M/(lambda1+lambda2) when feasible, else
// the projection onto the feasible segment for c1, nudged strictly inside
// finite feasibility endpoints by min(width/4, 1).
inline SplitMean split_mean(const forms::ProblemSpec& spec) {
  const SolvabilityVerdict v = solvability(spec);
  if (v.classification != Classification::StrictlySolvable)
    throw NotStrictlySolvable(std::string("split_mean requires a strictly solvable mean, got ") +
                              classification_name(v.classification));
  const auto m = domain::measures(spec.dom);
  const auto& R1 = spec.alpha1.range;
  const auto& R2 = spec.alpha2.range;
  const double M = v.mean_total;

  // Feasible c1 interval [A, B]: c1 in R1 and (M - lambda1*c1)/lambda2 in R2.
  const double A = std::max(R1.lo, (M - m.lambda2 * R2.hi) / m.lambda1);
  const double B = std::min(R1.hi, (M - m.lambda2 * R2.lo) / m.lambda1);

  SplitMean s;
  const double prop = M / (m.lambda1 + m.lambda2);
  if (prop > A && prop < B) {
    s.c1 = prop;  // proportional point strictly feasible: canonical choice
  } else if (!(A < B)) {
    s.c1 = 0.5 * (A + B);  // degenerate (or rounding-collapsed) feasible segment
  } else {
    // Project onto [A, B], then move strictly inside finite endpoints so the
    // chosen constants stay interior to both ranges.
    const double margin = std::min(0.25 * (B - A), 1.0);
    s.c1 = std::clamp(prop, A, B);
    if (std::isfinite(A)) s.c1 = std::max(s.c1, A + margin);
    if (std::isfinite(B)) s.c1 = std::min(s.c1, B - margin);
  }
  s.c2 = (M - m.lambda1 * s.c1) / m.lambda2;
  s.d1 = invert_density(spec.alpha1, s.c1);
  s.d2 = invert_density(spec.alpha2, s.c2);
  return s;
}

}  // namespace wentzell::resonance
