#pragma once
// Sup-norm machinery for difference fields: truncations, level-set decay
// profiles in mixed norms, closed-form vanishing levels for the geometric
// level-set recursion, and an empirical stability check for the perturbed
// problem.
//
//   truncate:       w_k = (|u-v| - k)^+ sgn(u-v) nodewise.
//   level_profile:  psi(k) = (sum_{A_k, interior} dx)^{1/p_s}
//                          + (sum_{A_k, boundary} dsigma)^{1/q_s},
//                   A_k = { nodes : |w| >= k }, k uniform on [0, ||w||_inf].
//   stampacchia_vanishing_level:
//                   k0 + c^{1/alpha} psi0^{(delta-1)/alpha} 2^{delta(delta-1)},
//                   the level below which a decay recursion
//                   psi(h) <= c (h-k)^{-alpha} psi(k)^delta forces psi = 0.
//                   A companion exposes the classical 2^{alpha delta/(delta-1)}
//                   factor; the two are reported side by side, not equated.
//   linf_stability_check:
//                   paired solves; lhs = ||U1-U2||_inf^{p-1} against lumped
//                   L^{p1}(dx) / L^{q1}(dsigma) data-difference norms.

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "wentzell/common.hpp"
#include "wentzell/domain.hpp"
#include "wentzell/forms.hpp"
#include "wentzell/solver.hpp"

namespace wentzell::estimates {

struct HypothesisViolation : Error {
  using Error::Error;
};

struct TruncationProfile {
  std::vector<double> levels;  // increasing, 0 .. w_inf
  std::vector<double> psi;     // mixed-norm size of the level set, nonincreasing
  double w_inf = 0.0;          // max |u - v| over all nodes
};

struct StabilityReport {
  double lhs = 0.0;      // ||U1 - U2||_inf^{p-1}
  double df_norm = 0.0;  // lumped L^{p1}(dx) norm of f1 - f2
  double dg_norm = 0.0;  // lumped L^{q1}(dsigma) norm of g1 - g2
  double C_fit = 0.0;    // lhs / (df_norm + dg_norm), 0 when both norms vanish
};

inline domain::FieldPair truncate(const domain::FieldPair& U, const domain::FieldPair& V,
                                  double k) {
  if (U.interior.size() != V.interior.size() || U.trace_index.size() != V.trace_index.size())
    throw DimensionMismatch("truncate: field shapes differ");
  if (k < 0) throw BadParameter("truncate: level must be nonnegative");
  domain::FieldPair W;
  W.trace_index = U.trace_index;
  W.interior.resize(U.interior.size());
  for (std::size_t i = 0; i < U.interior.size(); ++i) {
    const double d = U.interior[i] - V.interior[i];
    W.interior[i] = std::copysign(std::max(std::abs(d) - k, 0.0), d);
  }
  return W;
}

inline double stampacchia_vanishing_level(double psi_k0, double c, double alpha, double delta,
                                          double k0) {
  if (psi_k0 < 0) throw BadParameter("vanishing level: psi(k0) must be nonnegative");
  if (!(c > 0) || !(alpha > 0)) throw BadParameter("vanishing level: need c > 0 and alpha > 0");
  if (!(delta > 1)) throw BadParameter("vanishing level: need delta > 1");
  if (k0 < 0) throw BadParameter("vanishing level: need k0 >= 0");
  if (psi_k0 == 0) return k0;
  const double d = std::pow(c, 1.0 / alpha) * std::pow(psi_k0, (delta - 1.0) / alpha) *
                   std::pow(2.0, delta * (delta - 1.0));
  return k0 + d;
}

// Same data, with the classical factor 2^{alpha delta/(delta-1)} in place of
// 2^{delta(delta-1)}.  The two coincide at delta = 2, alpha = 1.
inline double stampacchia_vanishing_level_classical(double psi_k0, double c, double alpha,
                                                    double delta, double k0) {
  if (psi_k0 < 0) throw BadParameter("vanishing level: psi(k0) must be nonnegative");
  if (!(c > 0) || !(alpha > 0)) throw BadParameter("vanishing level: need c > 0 and alpha > 0");
  if (!(delta > 1)) throw BadParameter("vanishing level: need delta > 1");
  if (k0 < 0) throw BadParameter("vanishing level: need k0 >= 0");
  if (psi_k0 == 0) return k0;
  const double d = std::pow(c, 1.0 / alpha) * std::pow(psi_k0, (delta - 1.0) / alpha) *
                   std::pow(2.0, alpha * delta / (delta - 1.0));
  return k0 + d;
}

// The decay exponent min{p_s/p3, q_s/p3} as printed alongside its mixed
// variant min{p_s/p3, q_s/q3}; only positivity is guaranteed.
struct DecayExponents {
  double printed = 0.0;
  double mixed = 0.0;
};

inline DecayExponents decay_exponents(double p_s, double q_s, double p3, double q3) {
  if (!(p_s > 0) || !(q_s > 0) || !(p3 > 0) || !(q3 > 0))
    throw BadParameter("decay exponents: all exponents must be positive");
  return DecayExponents{std::min(p_s / p3, q_s / p3), std::min(p_s / p3, q_s / q3)};
}

inline TruncationProfile level_profile(const domain::FieldPair& U, const domain::FieldPair& V,
                                       const domain::DiscreteDomain& dom, double p_s, double q_s,
                                       int n_levels) {
  if (U.interior.size() != dom.n_nodes() || V.interior.size() != dom.n_nodes())
    throw DimensionMismatch("level_profile: field size does not match the domain");
  if (n_levels < 2) throw BadParameter("level_profile: need n_levels >= 2");
  if (!(p_s > 0) || !(q_s > 0)) throw BadParameter("level_profile: exponents must be positive");

  std::vector<double> w(dom.n_nodes());
  TruncationProfile prof;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = std::abs(U.interior[i] - V.interior[i]);
    prof.w_inf = std::max(prof.w_inf, w[i]);
  }
  prof.levels.resize(static_cast<std::size_t>(n_levels));
  prof.psi.resize(static_cast<std::size_t>(n_levels));
  for (int j = 0; j < n_levels; ++j) {
    const double k = prof.w_inf * static_cast<double>(j) / static_cast<double>(n_levels - 1);
    double vol = 0.0, surf = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
      if (w[i] >= k) vol += dom.dx_weights[i];
    for (std::size_t r = 0; r < dom.boundary_index.size(); ++r)
      if (w[static_cast<std::size_t>(dom.boundary_index[r])] >= k) surf += dom.dsigma_weights[r];
    prof.levels[static_cast<std::size_t>(j)] = k;
    prof.psi[static_cast<std::size_t>(j)] =
        (vol > 0 ? std::pow(vol, 1.0 / p_s) : 0.0) + (surf > 0 ? std::pow(surf, 1.0 / q_s) : 0.0);
  }
  return prof;
}

// Product of the flux monotonicity constants and the nonlinearity difference
// constants.  Every factor lies in (0, 1], so the product lower-bounds each
// per-term constant in the pairing gap A(U,W) - A(V,W) >= kappa A(W,W).
inline double calc_star_kappa(const forms::ProblemSpec& spec) {
  if (!(spec.p >= 2) || !(spec.q >= 2))
    throw HypothesisViolation("calc_star_kappa: requires p, q >= 2");
  if (!spec.alpha1.difference_constant || !spec.alpha2.difference_constant)
    throw HypothesisViolation("calc_star_kappa: nonlinearity lacks a difference constant");
  return forms::monotonicity_constant(spec.p) * forms::monotonicity_constant(spec.q) *
         (*spec.alpha1.difference_constant) * (*spec.alpha2.difference_constant);
}

inline StabilityReport linf_stability_check(const forms::ProblemSpec& spec1,
                                            const forms::ProblemSpec& spec2, double p1, double q1,
                                            double tol, long max_iter = 200000) {
  if (spec1.mode != forms::Mode::Perturbed || spec2.mode != forms::Mode::Perturbed)
    throw HypothesisViolation("stability check: both problems must be in Perturbed mode");
  if (spec1.p != spec2.p || spec1.q != spec2.q || spec1.rho != spec2.rho ||
      spec1.alpha1.name != spec2.alpha1.name || spec1.alpha2.name != spec2.alpha2.name ||
      spec1.dom.n_nodes() != spec2.dom.n_nodes() ||
      spec1.dom.n_boundary() != spec2.dom.n_boundary())
    throw HypothesisViolation("stability check: problems differ in more than their data");
  if (!(spec1.p >= 2) || !(spec1.q >= 2))
    throw HypothesisViolation("stability check: requires p, q >= 2");
  const double N = static_cast<double>(spec1.dom.dim);
  if (!(p1 > N / spec1.p))
    throw HypothesisViolation("stability check: interior data exponent too small (need p1 > N/p)");
  const bool general_q1 = q1 > (N - 1.0) / (spec1.p - 1.0);
  const bool equal_pq_q1 = spec1.p == spec1.q && q1 > (N - 1.0) / spec1.p;
  if (!general_q1 && !equal_pq_q1)
    throw HypothesisViolation("stability check: boundary data exponent too small");

  const auto r1 = solver::solve_perturbed(spec1, tol, max_iter);
  const auto r2 = solver::solve_perturbed(spec2, tol, max_iter);
  if (r1.verdict != solver::Verdict::Converged || r2.verdict != solver::Verdict::Converged)
    throw Error("stability check: a paired solve did not converge");

  StabilityReport rep;
  double du = 0.0;
  for (std::size_t i = 0; i < spec1.dom.n_nodes(); ++i)
    du = std::max(du, std::abs(r1.solution->interior[i] - r2.solution->interior[i]));
  rep.lhs = std::pow(du, spec1.p - 1.0);

  double sf = 0.0;
  for (std::size_t i = 0; i < spec1.dom.n_nodes(); ++i)
    sf += spec1.dom.dx_weights[i] * std::pow(std::abs(spec1.f[i] - spec2.f[i]), p1);
  double sg = 0.0;
  for (std::size_t r = 0; r < spec1.dom.n_boundary(); ++r)
    sg += spec1.dom.dsigma_weights[r] * std::pow(std::abs(spec1.g[r] - spec2.g[r]), q1);
  rep.df_norm = std::pow(sf, 1.0 / p1);
  rep.dg_norm = std::pow(sg, 1.0 / q1);
  const double denom = rep.df_norm + rep.dg_norm;
  rep.C_fit = denom > 0 ? rep.lhs / denom : 0.0;
  return rep;
}

}  // namespace wentzell::estimates
