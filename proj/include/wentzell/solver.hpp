#pragma once

// Convex minimization engines for the discrete energies: a perturbed solve
// (strictly convex, coercive; unique minimizer), a resonant solve seeded by
// the constant-split construction, and a paired-solve continuous-dependence
// probe.  The scheme is diagonally preconditioned gradient descent with
// monotone Armijo backtracking; the preconditioner is the lumped diagonal of
// the p-Laplacian (interior + tangential) stiffness at the current iterate,
// floored at 1e-8.  Convergence is declared on the weighted residual
// max_i |grad_i| / mu_i <= tol, where mu is the total nodal measure, so the
// metric approximates the strong residual and is mesh-independent.
// Divergence is declared when the iterate sup-norm exceeds a configurable
// ceiling (default 1e6) while the residual stagnates.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "wentzell/common.hpp"
#include "wentzell/domain.hpp"
#include "wentzell/forms.hpp"
#include "wentzell/resonance.hpp"

namespace wentzell::solver {

struct NonFiniteEnergy : Error {
  using Error::Error;
};
struct SpecMismatch : Error {
  using Error::Error;
};

enum class Verdict { Converged, Diverged, MaxIterations };

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Converged: return "Converged";
    case Verdict::Diverged: return "Diverged";
    default: return "MaxIterations";
  }
}

struct TraceEntry {
  double energy = 0.0;
  double residual_inf = 0.0;
  double step = 0.0;  // step length that produced this iterate (0 for the seed)
};

struct SolveReport {
  std::optional<domain::FieldPair> solution;  // present iff verdict == Converged
  Verdict verdict = Verdict::MaxIterations;
  long iterations = 0;
  double final_residual_inf = inf;
  double final_energy = inf;
  double final_sup_norm = 0.0;       // max |U_i| of the last iterate
  domain::FieldPair last_iterate;    // always populated (diagnostics for divergence)
  std::vector<TraceEntry> trace;     // one entry per visited iterate
};

namespace detail {

// Diagonal of the (frozen-coefficient) p-Laplacian stiffness at U: interior
// element contributions vol * w_p * |grad_k|^2 plus tangential rho * w_q / len.
inline std::vector<double> stiffness_diagonal(const domain::FieldPair& U,
                                              const forms::ProblemSpec& spec) {
  const auto& dom = spec.dom;
  std::vector<double> D(dom.n_nodes(), 0.0);
  const auto grads = dom.element_gradients(U.interior);
  for (std::size_t e = 0; e < grads.size(); ++e) {
    const domain::Element& el = dom.elements[e];
    const double s2 = grads[e].x * grads[e].x + grads[e].y * grads[e].y;
    const double w = el.volume * forms::flux_weight(s2, spec.p);
    for (int k = 0; k < el.nv; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      D[static_cast<std::size_t>(el.v[kk])] +=
          w * (el.grad[kk].x * el.grad[kk].x + el.grad[kk].y * el.grad[kk].y);
    }
  }
  if (spec.rho != 0.0) {
    std::vector<double> trace(dom.n_boundary());
    for (std::size_t b = 0; b < trace.size(); ++b)
      trace[b] = U.interior[static_cast<std::size_t>(dom.boundary_index[b])];
    const auto tang = dom.tangential_derivatives(trace);
    for (std::size_t s = 0; s < tang.size(); ++s) {
      const auto& be = dom.boundary_elements[s];
      const double w = spec.rho * forms::flux_weight(tang[s] * tang[s], spec.q) / be.length;
      D[static_cast<std::size_t>(dom.boundary_index[static_cast<std::size_t>(be.b)])] += w;
      D[static_cast<std::size_t>(dom.boundary_index[static_cast<std::size_t>(be.a)])] += w;
    }
  }
  for (double& d : D) d = std::max(d, 1e-8);
  return D;
}

inline void check_finite_data(const forms::ProblemSpec& spec) {
  for (double v : spec.f)
    if (!std::isfinite(v)) throw NonFiniteEnergy("interior data contain non-finite values");
  for (double v : spec.g)
    if (!std::isfinite(v)) throw NonFiniteEnergy("boundary data contain non-finite values");
}

// The stiffness preconditioner annihilates the constant mode, so plain
// preconditioned descent moves it at a mesh-dependent crawl.  Each iteration
// therefore finishes with an exact line search along the constant direction.
// Only the s-dependent energy terms are evaluated (gradient seminorms are
// shift-invariant); the move is applied only if the true energy decreases,
// preserving the monotone trace.  Returns the chosen shift (0 if none) and
// whether the 1D energy kept decreasing beyond the divergence ceiling.
struct ConstantSearchResult {
  double shift = 0.0;
  bool unbounded = false;
};

inline ConstantSearchResult constant_mode_search(const forms::ProblemSpec& spec,
                                                 std::vector<double>& u, double& E,
                                                 const std::vector<double>& w2, double data_mean,
                                                 double tol, double mu_total, double& scale,
                                                 double ceiling) {
  const auto& dom = spec.dom;
  const std::size_t n = u.size();
  const bool perturbed = spec.mode == forms::Mode::Perturbed;

  auto phi = [&](double s) {
    double val = -s * data_mean;
    for (std::size_t i = 0; i < n; ++i) val += dom.dx_weights[i] * spec.alpha1.lambda(u[i] + s);
    for (std::size_t b = 0; b < dom.n_boundary(); ++b)
      val += w2[b] * spec.alpha2.lambda(u[static_cast<std::size_t>(dom.boundary_index[b])] + s);
    if (perturbed) {
      for (std::size_t i = 0; i < n; ++i)
        val += dom.dx_weights[i] / spec.p * pow_pos(std::abs(u[i] + s), spec.p);
      if (spec.rho != 0.0)
        for (std::size_t b = 0; b < dom.n_boundary(); ++b) {
          const double v = u[static_cast<std::size_t>(dom.boundary_index[b])] + s;
          val += spec.rho * dom.dsigma_weights[b] / spec.q * pow_pos(std::abs(v), spec.q);
        }
    }
    return val;
  };

  // Derivative of the shifted energy at s = 0: the constant-mode residual.
  double deriv = -data_mean;
  for (std::size_t i = 0; i < n; ++i) deriv += dom.dx_weights[i] * spec.alpha1.alpha(u[i]);
  for (std::size_t b = 0; b < dom.n_boundary(); ++b)
    deriv += w2[b] * spec.alpha2.alpha(u[static_cast<std::size_t>(dom.boundary_index[b])]);
  if (perturbed) {
    for (std::size_t i = 0; i < n; ++i) deriv += dom.dx_weights[i] * forms::power_flux(u[i], spec.p);
    if (spec.rho != 0.0)
      for (std::size_t b = 0; b < dom.n_boundary(); ++b)
        deriv += spec.rho * dom.dsigma_weights[b] *
                 forms::power_flux(u[static_cast<std::size_t>(dom.boundary_index[b])], spec.q);
  }

  ConstantSearchResult out;
  if (std::abs(deriv) <= 0.1 * tol * mu_total) return out;  // already converged in this mode

  const double sgn = deriv > 0 ? -1.0 : 1.0;
  const double phi0 = phi(0.0);
  double s = sgn * scale;
  double phis = phi(s);
  for (int shrink = 0; phis >= phi0 && shrink < 60; ++shrink) {
    s *= 0.5;
    phis = phi(s);
  }
  if (phis >= phi0) return out;  // no representable decrease

  double s_lo = 0.0;
  const double search_cap = 4.0 * ceiling;  // past the divergence ceiling with margin
  while (true) {
    if (std::abs(s) > search_cap) {
      out.unbounded = true;
      break;
    }
    const double s_next = 2.0 * s;
    const double phi_next = phi(s_next);
    if (std::isfinite(phi_next) && phi_next < phis) {
      s_lo = s;
      s = s_next;
      phis = phi_next;
    } else {
      // Minimum bracketed in (s_lo, s_next): golden-section style refine.
      double a = s_lo, b = s_next;
      for (int it = 0; it < 40; ++it) {
        const double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
        if (phi(m1) <= phi(m2)) b = m2; else a = m1;
      }
      const double cand = 0.5 * (a + b);
      if (phi(cand) < phis) s = cand;
      break;
    }
  }

  // Apply only if the full energy genuinely decreases.
  std::vector<double> shifted(n);
  for (std::size_t i = 0; i < n; ++i) shifted[i] = u[i] + s;
  const double Enew = forms::energy(domain::FieldPair{shifted, spec.dom.boundary_index}, spec);
  if (std::isfinite(Enew) && Enew < E) {
    u.swap(shifted);
    E = Enew;
    out.shift = s;
    scale = std::min(std::max(std::abs(s), 1e-6), search_cap);
  }
  return out;
}

inline SolveReport minimize(const forms::ProblemSpec& spec, domain::FieldPair U, double tol,
                            long max_iter, double ceiling) {
  if (!(tol > 0)) throw BadParameter("solver tolerance must be positive");
  if (max_iter < 1) throw BadParameter("need max_iter >= 1");
  if (!(ceiling > 0)) throw BadParameter("divergence ceiling must be positive");
  check_finite_data(spec);

  constexpr double kArmijo = 1e-4;       // sufficient-decrease fraction
  constexpr int kWindow = 50;            // residual stagnation window
  constexpr double kFraction = 0.01;     // minimum relative residual reduction

  const auto mu = forms::mu_weights(spec);
  const auto w2 = forms::pair_weights(spec);
  const std::size_t n = U.interior.size();
  double mu_total = 0.0;
  for (double m : mu) mu_total += m;
  const double data_mean = forms::data_pairing(domain::make_field(spec.dom, 1.0), spec);
  SolveReport rep;
  rep.trace.reserve(256);

  double E = forms::energy(U, spec);
  if (!std::isfinite(E)) throw NonFiniteEnergy("energy is non-finite at the initial iterate");
  double step = 1.0;        // persistent Armijo trial step
  double last_step = 0.0;   // step that produced the current iterate
  double cscale = 1.0;      // persistent constant-search bracket scale
  std::vector<double> trial(n);

  for (long iter = 0;; ++iter) {
    const auto G = forms::energy_gradient(U, spec).interior;
    double res = 0.0, sup = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      res = std::max(res, std::abs(G[i]) / mu[i]);
      sup = std::max(sup, std::abs(U.interior[i]));
    }
    rep.trace.push_back(TraceEntry{E, res, last_step});
    rep.iterations = iter;
    rep.final_residual_inf = res;
    rep.final_energy = E;
    rep.final_sup_norm = sup;

    if (res <= tol) {
      rep.verdict = Verdict::Converged;
      rep.solution = U;
      break;
    }
    if (sup > ceiling && iter >= kWindow) {
      const double before = rep.trace[static_cast<std::size_t>(iter - kWindow)].residual_inf;
      if (before - res < kFraction * before) {
        rep.verdict = Verdict::Diverged;
        break;
      }
    }
    if (iter >= max_iter) {
      rep.verdict = Verdict::MaxIterations;
      break;
    }

    const auto D = stiffness_diagonal(U, spec);
    double slope = 0.0;
    for (std::size_t i = 0; i < n; ++i) slope -= G[i] * G[i] / D[i];

    // Near the minimum the certified decrease t*|slope| drops below the
    // floating-point resolution of the total energy; demanding a verified
    // decrease there would reject every step and freeze the residual around
    // sqrt(eps).  Once that happens the D-weighted gradient norm takes over
    // as the acceptance merit: it contracts monotonically for stable steps
    // and keeps working where energy differences are pure rounding noise.
    const double fp_floor = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(E));
    const double r2 = -slope;

    bool accepted = false;
    double t = step;
    for (int halvings = 0; halvings < 120 && !accepted; ++halvings) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = U.interior[i] - t * G[i] / D[i];
      const domain::FieldPair T{trial, U.trace_index};
      const double Enew = forms::energy(T, spec);
      if (std::isfinite(Enew)) {
        if (t * r2 > fp_floor) {
          accepted = Enew <= E + kArmijo * t * slope;
        } else if (Enew <= E + fp_floor) {
          // An energy comparison here would read pure rounding noise, so the
          // decision falls to the merit norm alone.
          const auto Gt = forms::energy_gradient(T, spec).interior;
          const auto Dt = stiffness_diagonal(T, spec);
          double r2t = 0.0;
          for (std::size_t i = 0; i < n; ++i) r2t += Gt[i] * Gt[i] / Dt[i];
          accepted = r2t <= r2 * (1.0 - 1e-6);
        }
      }
      if (accepted) {
        U.interior.swap(trial);
        E = Enew;
        last_step = t;
        step = 2.0 * t;
      } else {
        t *= 0.5;
      }
    }
    const auto cres =
        constant_mode_search(spec, U.interior, E, w2, data_mean, tol, mu_total, cscale, ceiling);

    if (!accepted && cres.shift == 0.0) {
      // No acceptable step at any scale in either direction set: the iterate
      // is at the numerical floor of the energy with the residual above tol.
      rep.verdict = Verdict::MaxIterations;
      break;
    }
  }
  rep.last_iterate = U;
  return rep;
}

}  // namespace detail

inline SolveReport solve_perturbed(const forms::ProblemSpec& spec, double tol = 1e-8,
                                   long max_iter = 200000, double ceiling = 1e6) {
  if (spec.mode != forms::Mode::Perturbed)
    throw forms::BadMode("solve_perturbed requires Perturbed mode");
  forms::check_spec(spec);
  return detail::minimize(spec, domain::make_field(spec.dom, 0.0), tol, max_iter, ceiling);
}

inline SolveReport solve_perturbed_from(const forms::ProblemSpec& spec, domain::FieldPair start,
                                        double tol = 1e-8, long max_iter = 200000,
                                        double ceiling = 1e6) {
  if (spec.mode != forms::Mode::Perturbed)
    throw forms::BadMode("solve_perturbed requires Perturbed mode");
  forms::check_spec(spec);
  forms::check_field(spec, start);
  return detail::minimize(spec, std::move(start), tol, max_iter, ceiling);
}

// Resonant solve: classify the mean first; when strictly solvable, seed the
// descent with the constant preimage d1 from the canonical mean split (the
// constructive existence recipe).  Boundary-of-interval means are never
// reported Converged or Diverged - existence there is genuinely undecided -
// so the verdict is capped to MaxIterations.
inline SolveReport solve_resonant(const forms::ProblemSpec& spec, double tol = 1e-8,
                                  long max_iter = 200000, double ceiling = 1e6) {
  if (spec.mode != forms::Mode::Resonant)
    throw forms::BadMode("solve_resonant requires Resonant mode");
  forms::check_spec(spec);
  const auto verdict = resonance::solvability(spec);
  domain::FieldPair start = domain::make_field(spec.dom, 0.0);
  if (verdict.classification == resonance::Classification::StrictlySolvable) {
    const auto split = resonance::split_mean(spec);
    start = domain::make_field(spec.dom, split.d1);
  }
  SolveReport rep = detail::minimize(spec, std::move(start), tol, max_iter, ceiling);
  if (verdict.classification == resonance::Classification::BoundaryCase) {
    rep.verdict = Verdict::MaxIterations;
    rep.solution.reset();
  }
  return rep;
}

struct Dependence {
  double du_inf = 0.0;   // sup-norm distance of the two solutions
  double df_norm = 0.0;  // lumped L^{p1}(dx) norm of f1 - f2
  double dg_norm = 0.0;  // lumped L^{q1}(dsigma) norm of g1 - g2
};

// Solve both problems and measure the solution distance against the data
// distance.  The specs must agree in everything except (f, g).
inline Dependence continuous_dependence(const forms::ProblemSpec& spec1,
                                        const forms::ProblemSpec& spec2, double tol,
                                        double p1 = 2.0, double q1 = 2.0,
                                        long max_iter = 200000) {
  if (spec1.mode != forms::Mode::Perturbed || spec2.mode != forms::Mode::Perturbed)
    throw SpecMismatch("continuous_dependence requires Perturbed mode");
  if (spec1.p != spec2.p || spec1.q != spec2.q || spec1.rho != spec2.rho ||
      spec1.alpha1.name != spec2.alpha1.name || spec1.alpha2.name != spec2.alpha2.name ||
      spec1.dom.dim != spec2.dom.dim || spec1.dom.n_nodes() != spec2.dom.n_nodes() ||
      spec1.dom.n_boundary() != spec2.dom.n_boundary() ||
      spec1.dom.cells_x != spec2.dom.cells_x || spec1.dom.cells_y != spec2.dom.cells_y ||
      spec1.dom.extent_x != spec2.dom.extent_x || spec1.dom.extent_y != spec2.dom.extent_y)
    throw SpecMismatch("continuous_dependence: specs differ beyond the data vectors");
  if (!(spec1.p >= 2.0) || !(spec1.q >= 2.0))
    throw SpecMismatch("continuous_dependence requires p, q >= 2");

  const auto r1 = solve_perturbed(spec1, tol, max_iter);
  const auto r2 = solve_perturbed(spec2, tol, max_iter);
  if (r1.verdict != Verdict::Converged || r2.verdict != Verdict::Converged)
    throw Error("continuous_dependence: a paired solve did not converge");

  Dependence d;
  const auto& U1 = r1.solution->interior;
  const auto& U2 = r2.solution->interior;
  for (std::size_t i = 0; i < U1.size(); ++i) d.du_inf = std::max(d.du_inf, std::abs(U1[i] - U2[i]));
  double sf = 0.0, sg = 0.0;
  for (std::size_t i = 0; i < spec1.f.size(); ++i)
    sf += spec1.dom.dx_weights[i] * std::pow(std::abs(spec1.f[i] - spec2.f[i]), p1);
  for (std::size_t b = 0; b < spec1.g.size(); ++b)
    sg += spec1.dom.dsigma_weights[b] * std::pow(std::abs(spec1.g[b] - spec2.g[b]), q1);
  d.df_norm = std::pow(sf, 1.0 / p1);
  d.dg_norm = std::pow(sg, 1.0 / q1);
  return d;
}

}  // namespace wentzell::solver
