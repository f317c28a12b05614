#pragma once

// Discrete energy functionals for the quasilinear problem with nonlinear
// dynamical boundary coupling, and their nodal gradients / weak forms.
//
// The energy of a nodal field u with boundary trace v is
//
//   E(u) = (1/p) sum_e vol |grad u|^p  +  (rho/q) sum_s len |d_tau v|^q
//        + sum_i dx_i L1(u_i)          +  sum_b w2_b L2(v_b)
//        - sum_i dx_i f_i u_i          -  sum_b w2_b g_b v_b
//        [Perturbed: + (1/p) sum_i dx_i |u_i|^p + (rho/q) sum_b ds_b |v_b|^q]
//
// where L_j is the potential of the density alpha_j, w2 = dsigma/b in
// Resonant mode and dsigma (with b = 1 enforced) in Perturbed mode.  The
// tangential term always integrates plain arclength.  The gradient of E and
// the weak form A(u, .) share one assembly, so the identity
// form_A(U,V) - <F,V> = <energy_gradient(U), V> holds to rounding.

#include <cmath>
#include <vector>

#include "wentzell/common.hpp"
#include "wentzell/domain.hpp"
#include "wentzell/orlicz.hpp"

namespace wentzell::forms {

// An operation was invoked with the wrong ProblemSpec mode.
struct BadMode : Error {
  using Error::Error;
};

enum class Mode { Resonant, Perturbed };

struct ProblemSpec {
  double p = 2.0;
  double q = 2.0;
  double rho = 1.0;  // 0 or 1
  Mode mode = Mode::Resonant;
  orlicz::NFunction alpha1;
  orlicz::NFunction alpha2;
  std::vector<double> f;  // one value per mesh node
  std::vector<double> g;  // one value per boundary position
  domain::DiscreteDomain dom;
};

inline void check_spec(const ProblemSpec& spec) {
  if (!(spec.p > 1.0) || !(spec.q > 1.0)) throw BadParameter("need exponents p, q > 1");
  if (spec.rho != 0.0 && spec.rho != 1.0) throw BadParameter("rho must be 0 or 1");
  if (!spec.alpha1.alpha || !spec.alpha2.alpha) throw BadParameter("missing nonlinearity densities");
  if (spec.f.size() != spec.dom.n_nodes() || spec.g.size() != spec.dom.n_boundary())
    throw DimensionMismatch("data vectors do not match domain");
  if (spec.mode == Mode::Perturbed)
    for (double b : spec.dom.b_values)
      if (std::abs(b - 1.0) > 1e-12)
        throw BadParameter("Perturbed mode requires boundary weight b = 1");
}

inline void check_field(const ProblemSpec& spec, const domain::FieldPair& U) {
  if (U.interior.size() != spec.dom.n_nodes())
    throw DimensionMismatch("field does not match domain");
}

// Boundary weight of the data / potential terms: dsigma/b or plain dsigma.
inline std::vector<double> pair_weights(const ProblemSpec& spec) {
  std::vector<double> w(spec.dom.n_boundary());
  for (std::size_t b = 0; b < w.size(); ++b)
    w[b] = spec.mode == Mode::Resonant ? spec.dom.dsigma_weights[b] / spec.dom.b_values[b]
                                       : spec.dom.dsigma_weights[b];
  return w;
}

// Total nodal measure dx + (boundary weight), used to scale residuals so the
// convergence metric approximates the strong residual, mesh-independently.
inline std::vector<double> mu_weights(const ProblemSpec& spec) {
  std::vector<double> w = spec.dom.dx_weights;
  const auto w2 = pair_weights(spec);
  for (std::size_t b = 0; b < w2.size(); ++b)
    w[static_cast<std::size_t>(spec.dom.boundary_index[b])] += w2[b];
  return w;
}

// |v|^{p-2} given s2 = |v|^2.  For r < 2 the flux is smoothed with
// eps = 1e-10 so descent methods never see the singular weight at v = 0;
// this smoothing enters every derivative-level object (gradient and weak
// form) but never the energy itself.
inline double flux_weight(double s2, double r) {
  if (r == 2.0) return 1.0;
  if (r > 2.0) return s2 == 0.0 ? 0.0 : std::pow(s2, 0.5 * (r - 2.0));
  constexpr double eps2 = 1e-20;
  return std::pow(eps2 + s2, 0.5 * (r - 2.0));
}

// |s|^{r-2} s, exact (unsmoothed) and zero at zero; used for the Perturbed
// zero-order power terms and exposed for scalar inequality checks.
inline double power_flux(double s, double r) {
  if (s == 0.0) return 0.0;
  return std::copysign(pow_pos(std::abs(s), r - 1.0), s);
}

inline domain::Vec2 vector_flux(domain::Vec2 v, double r) {
  const double s2 = v.x * v.x + v.y * v.y;
  if (s2 == 0.0) return domain::Vec2{0.0, 0.0};
  const double w = std::pow(s2, 0.5 * (r - 2.0));
  return domain::Vec2{w * v.x, w * v.y};
}

// (|a|^{p-2}a - |b|^{p-2}b) . (a - b): nonnegative for all p > 1 and bounded
// below by monotonicity_constant(p) * |a-b|^p when p >= 2.
inline double flux_monotonicity_gap(domain::Vec2 a, domain::Vec2 b, double p) {
  const domain::Vec2 fa = vector_flux(a, p), fb = vector_flux(b, p);
  return (fa.x - fb.x) * (a.x - b.x) + (fa.y - fb.y) * (a.y - b.y);
}

// The sharp uniform-monotonicity constant c_p = 2^{2-p} for p >= 2
// (attained on antipodal pairs a = -b).
inline double monotonicity_constant(double p) {
  if (!(p >= 2.0)) throw BadParameter("monotonicity constant is tabulated for p >= 2 only");
  return std::pow(2.0, 2.0 - p);
}

inline double energy(const domain::FieldPair& U, const ProblemSpec& spec) {
  check_spec(spec);
  check_field(spec, U);
  const auto& dom = spec.dom;
  double E = 0.0;

  const auto grads = dom.element_gradients(U.interior);
  for (std::size_t e = 0; e < grads.size(); ++e) {
    const double s2 = grads[e].x * grads[e].x + grads[e].y * grads[e].y;
    E += dom.elements[e].volume / spec.p * pow_pos(s2, 0.5 * spec.p);
  }

  std::vector<double> trace(dom.n_boundary());
  for (std::size_t b = 0; b < trace.size(); ++b)
    trace[b] = U.interior[static_cast<std::size_t>(dom.boundary_index[b])];

  if (spec.rho != 0.0) {
    const auto tang = dom.tangential_derivatives(trace);
    for (std::size_t s = 0; s < tang.size(); ++s)
      E += spec.rho * dom.boundary_elements[s].length / spec.q * pow_pos(tang[s] * tang[s], 0.5 * spec.q);
  }

  const auto w2 = pair_weights(spec);
  for (std::size_t i = 0; i < dom.n_nodes(); ++i) {
    E += dom.dx_weights[i] * spec.alpha1.lambda(U.interior[i]);
    E -= dom.dx_weights[i] * spec.f[i] * U.interior[i];
  }
  for (std::size_t b = 0; b < dom.n_boundary(); ++b) {
    E += w2[b] * spec.alpha2.lambda(trace[b]);
    E -= w2[b] * spec.g[b] * trace[b];
  }

  if (spec.mode == Mode::Perturbed) {
    for (std::size_t i = 0; i < dom.n_nodes(); ++i)
      E += dom.dx_weights[i] / spec.p * pow_pos(U.interior[i] * U.interior[i], 0.5 * spec.p);
    if (spec.rho != 0.0)
      for (std::size_t b = 0; b < dom.n_boundary(); ++b)
        E += spec.rho * dom.dsigma_weights[b] / spec.q * pow_pos(trace[b] * trace[b], 0.5 * spec.q);
  }
  return E;
}

// The operator part of the weak form: A(U) tested against every nodal basis
// function.  Shared by energy_gradient and form_A.
inline std::vector<double> operator_apply(const domain::FieldPair& U, const ProblemSpec& spec) {
  check_spec(spec);
  check_field(spec, U);
  const auto& dom = spec.dom;
  std::vector<double> G(dom.n_nodes(), 0.0);

  const auto grads = dom.element_gradients(U.interior);
  for (std::size_t e = 0; e < grads.size(); ++e) {
    const domain::Element& el = dom.elements[e];
    const double s2 = grads[e].x * grads[e].x + grads[e].y * grads[e].y;
    const double w = el.volume * flux_weight(s2, spec.p);
    for (int k = 0; k < el.nv; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      G[static_cast<std::size_t>(el.v[kk])] += w * (grads[e].x * el.grad[kk].x + grads[e].y * el.grad[kk].y);
    }
  }

  std::vector<double> trace(dom.n_boundary());
  for (std::size_t b = 0; b < trace.size(); ++b)
    trace[b] = U.interior[static_cast<std::size_t>(dom.boundary_index[b])];

  if (spec.rho != 0.0) {
    const auto tang = dom.tangential_derivatives(trace);
    for (std::size_t s = 0; s < tang.size(); ++s) {
      const auto& be = dom.boundary_elements[s];
      const double w = spec.rho * flux_weight(tang[s] * tang[s], spec.q) * tang[s];
      G[static_cast<std::size_t>(dom.boundary_index[static_cast<std::size_t>(be.b)])] += w;
      G[static_cast<std::size_t>(dom.boundary_index[static_cast<std::size_t>(be.a)])] -= w;
    }
  }

  const auto w2 = pair_weights(spec);
  for (std::size_t i = 0; i < dom.n_nodes(); ++i)
    G[i] += dom.dx_weights[i] * spec.alpha1.alpha(U.interior[i]);
  for (std::size_t b = 0; b < dom.n_boundary(); ++b)
    G[static_cast<std::size_t>(dom.boundary_index[b])] += w2[b] * spec.alpha2.alpha(trace[b]);

  if (spec.mode == Mode::Perturbed) {
    for (std::size_t i = 0; i < dom.n_nodes(); ++i)
      G[i] += dom.dx_weights[i] * power_flux(U.interior[i], spec.p);
    if (spec.rho != 0.0)
      for (std::size_t b = 0; b < dom.n_boundary(); ++b)
        G[static_cast<std::size_t>(dom.boundary_index[b])] +=
            spec.rho * dom.dsigma_weights[b] * power_flux(trace[b], spec.q);
  }
  return G;
}

// <F, V> with the mode's boundary pairing.
inline double data_pairing(const domain::FieldPair& V, const ProblemSpec& spec) {
  check_spec(spec);
  check_field(spec, V);
  const auto& dom = spec.dom;
  const auto w2 = pair_weights(spec);
  double sum = 0.0;
  for (std::size_t i = 0; i < dom.n_nodes(); ++i) sum += dom.dx_weights[i] * spec.f[i] * V.interior[i];
  for (std::size_t b = 0; b < dom.n_boundary(); ++b)
    sum += w2[b] * spec.g[b] * V.interior[static_cast<std::size_t>(dom.boundary_index[b])];
  return sum;
}

inline domain::FieldPair energy_gradient(const domain::FieldPair& U, const ProblemSpec& spec) {
  std::vector<double> G = operator_apply(U, spec);
  const auto& dom = spec.dom;
  const auto w2 = pair_weights(spec);
  for (std::size_t i = 0; i < dom.n_nodes(); ++i) G[i] -= dom.dx_weights[i] * spec.f[i];
  for (std::size_t b = 0; b < dom.n_boundary(); ++b)
    G[static_cast<std::size_t>(dom.boundary_index[b])] -= w2[b] * spec.g[b];
  return domain::FieldPair{std::move(G), dom.boundary_index};
}

inline double form_A(const domain::FieldPair& U, const domain::FieldPair& V, const ProblemSpec& spec) {
  check_field(spec, V);
  const std::vector<double> AU = operator_apply(U, spec);
  double sum = 0.0;
  for (std::size_t i = 0; i < AU.size(); ++i) sum += AU[i] * V.interior[i];
  return sum;
}

// A(U, U-V) - A(V, U-V): nonnegative by monotonicity of every constituent.
inline double monotonicity_gap(const domain::FieldPair& U, const domain::FieldPair& V,
                               const ProblemSpec& spec) {
  check_field(spec, U);
  check_field(spec, V);
  const std::vector<double> AU = operator_apply(U, spec);
  const std::vector<double> AV = operator_apply(V, spec);
  double sum = 0.0;
  for (std::size_t i = 0; i < AU.size(); ++i)
    sum += (AU[i] - AV[i]) * (U.interior[i] - V.interior[i]);
  return sum;
}

}  // namespace wentzell::forms
