#pragma once

// N-function machinery: a scalar nonlinearity alpha together with its potential
// Lambda(t) = \int_0^{|t|} alpha(s) ds, the complementary (Young-conjugate)
// potential, the range interval of alpha, doubling (Delta_2) and lower-growth
// (Nabla_2) condition checks, and weighted modular / Luxemburg norm evaluation.
//
// Built-in nonlinearities are registered by name for config-driven use:
//   "power" (alpha = c|s|^{r-1}s), "arctan", "linear", "zero",
//   "custom-table" (monotone CSV table t,alpha(t), linear interpolation).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "wentzell/common.hpp"

namespace wentzell::orlicz {

struct NotMonotone : Error {
  using Error::Error;
};
struct NotOdd : Error {
  using Error::Error;
};
struct NonzeroAtOrigin : Error {
  using Error::Error;
};
struct EmptyGrid : Error {
  using Error::Error;
};
struct MissingDelta2Constant : Error {
  using Error::Error;
};
struct NoFiniteBracket : Error {
  using Error::Error;
};
struct WeightMismatch : Error {
  using Error::Error;
};

// Extended-real interval with explicit openness flags; infinite endpoints are
// always flagged open.
struct RangeInterval {
  double lo = -inf;
  double hi = inf;
  bool lo_open = true;
  bool hi_open = true;
};

using ScalarFn = std::function<double(double)>;

struct NFunction {
  ScalarFn alpha;         // odd nondecreasing density, alpha(0) = 0
  ScalarFn lambda;        // potential, even convex, lambda(0) = 0
  ScalarFn lambda_tilde;  // complementary potential; may return +infinity
  RangeInterval range;    // range of alpha
  std::optional<double> delta2_constant;      // C2 with lambda(2t) <= C2*lambda(t), when known
  std::optional<double> difference_constant;  // c with c|alpha(x-y)| <= |alpha(x)-alpha(y)|, when known
  std::string name = "custom";
};

struct WeightedSamples {
  std::vector<double> values;
  std::vector<double> weights;  // strictly positive quadrature weights
};

inline WeightedSamples make_weighted_samples(std::vector<double> values, std::vector<double> weights) {
  if (values.size() != weights.size())
    throw DimensionMismatch("weighted samples: values/weights length mismatch");
  for (double w : weights)
    if (!(w > 0)) throw BadParameter("weighted samples: weights must be positive");
  return WeightedSamples{std::move(values), std::move(weights)};
}

// ---------------------------------------------------------------------------
// Quadrature and generalized inverse helpers.

namespace detail {

// Adaptive Simpson on [a,b] with absolute tolerance tol.  A relative floor of
// a few ulps stops refinement once roundoff dominates, so large integrals
// terminate at machine-level relative accuracy instead of recursing forever.
inline double adaptive_simpson_rec(const ScalarFn& f, double a, double b, double fa, double fm, double fb,
                                   double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  const double floor = 1e-14 * (std::fabs(left) + std::fabs(right));
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol + floor) return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double adaptive_simpson(const ScalarFn& f, double a, double b, double tol, int depth = 28) {
  if (b <= a) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth);
}

// Integrate f over [0, x] splitting into panels no wider than `step`
// (capped count), each integrated adaptively to a share of `tol`.
inline double integrate_panels(const ScalarFn& f, double x, double step, double tol) {
  if (x <= 0) return 0.0;
  int panels = 1;
  if (step > 0 && x > step) panels = static_cast<int>(std::min(2048.0, std::ceil(x / step)));
  const double h = x / panels;
  double sum = 0.0;
  for (int i = 0; i < panels; ++i) sum += adaptive_simpson(f, i * h, (i + 1) * h, tol / panels);
  return sum;
}

// Generalized inverse inf{tau > 0 : alpha(tau) > s} for s >= 0; +infinity when
// alpha stays <= s up to the probe cap (bounded alpha, s at or above its sup).
inline double generalized_inverse(const ScalarFn& alpha, double s) {
  if (!(s >= 0)) throw BadParameter("generalized_inverse: s must be >= 0");
  constexpr double cap = 1e13;
  double hi = 1.0;
  double lo = 0.0;
  while (alpha(hi) <= s) {
    lo = hi;
    hi *= 2.0;
    if (hi > cap) return inf;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (alpha(mid) > s ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Construction from a raw density.

// Numeric range estimate: probes alpha at +-1e8 and treats near-stationary
// tails as bounded.  Bounded endpoints are open iff alpha was strictly
// increasing on the validation grid (a bounded strictly monotone density never
// attains its sup; a saturating table does).
inline RangeInterval estimate_range(const ScalarFn& alpha, bool strictly_increasing) {
  RangeInterval r;
  const double a7 = alpha(1e7), a8 = alpha(1e8);
  if (a8 - a7 <= 1e-6 * std::max(1.0, std::fabs(a8))) {
    r.hi = a8;
    r.hi_open = strictly_increasing;
  }
  const double b7 = alpha(-1e7), b8 = alpha(-1e8);
  if (b7 - b8 <= 1e-6 * std::max(1.0, std::fabs(b8))) {
    r.lo = b8;
    r.lo_open = strictly_increasing;
  }
  return r;
}

// Builds the full NFunction from a density: Lambda by adaptive quadrature,
// the complementary potential through the generalized inverse of alpha, and a
// numeric range estimate.  `quadrature_step` caps the coarsest quadrature
// panel; the adaptive tolerance is 1e-10 per integral.
inline NFunction nfunction_from_alpha(ScalarFn alpha, double quadrature_step) {
  if (!(quadrature_step > 0)) throw BadParameter("nfunction_from_alpha: quadrature_step must be > 0");

  // Validation sampling: odd, nondecreasing, zero at the origin.
  std::vector<double> grid{0.0};
  for (int d = -8; d < 8; ++d)
    for (int j = 0; j < 8; ++j) {
      const double t = std::pow(10.0, d + j / 8.0);
      grid.push_back(t);
      grid.push_back(-t);
    }
  std::sort(grid.begin(), grid.end());
  if (std::fabs(alpha(0.0)) > 1e-12) throw NonzeroAtOrigin("nfunction_from_alpha: alpha(0) != 0");
  bool strict = true;
  double prev = alpha(grid.front());
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double cur = alpha(grid[i]);
    if (cur < prev - 1e-12 * std::max(1.0, std::fabs(prev)))
      throw NotMonotone("nfunction_from_alpha: alpha decreases near t=" + std::to_string(grid[i]));
    if (!(cur > prev)) strict = false;
    prev = cur;
  }
  for (double t : grid) {
    const double a = alpha(t), b = alpha(-t);
    if (std::fabs(a + b) > 1e-12 * std::max(1.0, std::fabs(a)))
      throw NotOdd("nfunction_from_alpha: alpha not odd near t=" + std::to_string(t));
  }

  NFunction nf;
  nf.name = "from-alpha";
  nf.range = estimate_range(alpha, strict);
  const double step = quadrature_step;
  nf.lambda = [alpha, step](double t) {
    return detail::integrate_panels(alpha, std::fabs(t), step, 1e-10);
  };
  const RangeInterval range = nf.range;
  nf.lambda_tilde = [alpha, step, range](double t) {
    const double a = std::fabs(t);
    if (a > range.hi) return inf;
    ScalarFn inv = [&alpha](double s) { return detail::generalized_inverse(alpha, s); };
    return detail::integrate_panels(inv, a, step, 1e-10);
  };
  nf.alpha = std::move(alpha);
  return nf;
}

// ---------------------------------------------------------------------------
// Condition checks.

struct Delta2Report {
  bool satisfied = false;
  double constant = inf;          // sup over the grid of lambda(2t)/lambda(t)
  double sandwich_constant = 1.0; // largest c with c*t*alpha(t) <= lambda(t) on the grid
};

// Doubling-condition probe on a positive grid (documented default: logarithmic
// 1e-6..1e6).  The condition is declared satisfied when the ratio is finite and
// its maximum varies by < 1% between the top two decades of the grid (the
// condition is asymptotic; a plateau criterion is the numeric proxy).
inline Delta2Report check_delta2(const NFunction& nf, const std::vector<double>& t_grid) {
  if (t_grid.empty()) throw EmptyGrid("check_delta2: empty grid");
  for (double t : t_grid)
    if (!(t > 0)) throw BadParameter("check_delta2: grid must be strictly positive");

  Delta2Report rep;
  const double tmax = *std::max_element(t_grid.begin(), t_grid.end());
  double sup = 0.0;
  double m_top = 0.0, m_prev = 0.0;
  bool have_top = false, have_prev = false;
  double sandwich = inf;
  for (double t : t_grid) {
    const double l1 = nf.lambda(t), l2 = nf.lambda(2.0 * t);
    const double ratio = (l1 == 0.0) ? (l2 == 0.0 ? 1.0 : inf) : l2 / l1;
    sup = std::max(sup, ratio);
    if (t > tmax / 10.0) {
      m_top = std::max(m_top, ratio);
      have_top = true;
    } else if (t > tmax / 100.0) {
      m_prev = std::max(m_prev, ratio);
      have_prev = true;
    }
    const double ta = t * nf.alpha(t);
    if (ta > 0.0 && l1 > 0.0) sandwich = std::min(sandwich, l1 / ta);
  }
  rep.constant = sup;
  rep.sandwich_constant = std::isfinite(sandwich) ? sandwich : 1.0;
  if (!std::isfinite(sup)) {
    rep.satisfied = false;
  } else if (have_top && have_prev) {
    rep.satisfied = std::fabs(m_top - m_prev) < 0.01 * m_prev;
  } else {
    rep.satisfied = true;  // grid narrower than two decades: finiteness only
  }
  return rep;
}

struct Nabla2Report {
  bool holds = false;
  double c_used = 0.0;
};

// Lower-growth check for the complementary potential: with C2 the declared
// doubling constant and c = 2^(C2-1), verifies Psi(t)*2c <= Psi(c t) on the
// grid (infinite right-hand sides count as holding).
inline Nabla2Report check_nabla2_from_delta2(const NFunction& nf, const std::vector<double>& t_grid) {
  if (!nf.delta2_constant)
    throw MissingDelta2Constant("check_nabla2_from_delta2: nf.delta2_constant not set");
  if (t_grid.empty()) throw EmptyGrid("check_nabla2_from_delta2: empty grid");
  Nabla2Report rep;
  rep.c_used = std::pow(2.0, *nf.delta2_constant - 1.0);
  rep.holds = true;
  for (double t : t_grid) {
    const double lhs = nf.lambda_tilde(t) * 2.0 * rep.c_used;
    const double rhs = nf.lambda_tilde(rep.c_used * t);
    if (rhs == inf) continue;
    if (!(lhs <= rhs * (1.0 + 1e-12))) {
      rep.holds = false;
      break;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Modular and Luxemburg norm.

inline double modular(const WeightedSamples& s, const NFunction& nf) {
  if (s.values.size() != s.weights.size())
    throw DimensionMismatch("modular: values/weights length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < s.values.size(); ++i) sum += s.weights[i] * nf.lambda(s.values[i]);
  return sum;
}

// inf{k > 0 : modular(u/k) <= 1} by bracketing + bisection on the monotone map
// k -> modular(u/k); returns the upper bracket end, so the modular at the
// returned norm is guaranteed <= 1.
inline double luxemburg_norm(const WeightedSamples& s, const NFunction& nf, double rel_tol) {
  if (!(rel_tol > 0)) throw BadParameter("luxemburg_norm: rel_tol must be > 0");
  bool all_zero = true;
  for (double v : s.values)
    if (v != 0.0) {
      all_zero = false;
      break;
    }
  if (all_zero) return 0.0;

  auto modular_at = [&](double k) {
    double sum = 0.0;
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      sum += s.weights[i] * nf.lambda(s.values[i] / k);
      if (sum == inf) return inf;
    }
    return sum;
  };

  double k_lo, k_hi;
  if (modular_at(1.0) <= 1.0) {
    k_hi = 1.0;
    k_lo = 0.5;
    while (modular_at(k_lo) <= 1.0) {
      k_hi = k_lo;
      k_lo *= 0.5;
      if (k_lo < 1e-300) return 0.0;  // degenerate potential (e.g. identically 0)
    }
  } else {
    k_lo = 1.0;
    k_hi = 2.0;
    while (modular_at(k_hi) > 1.0) {
      k_lo = k_hi;
      k_hi *= 2.0;
      if (k_hi > 1e300)
        throw NoFiniteBracket("luxemburg_norm: modular stays above 1 for all tested k");
    }
  }
  while (k_hi - k_lo > rel_tol * k_hi) {
    const double mid = 0.5 * (k_lo + k_hi);
    (modular_at(mid) <= 1.0 ? k_hi : k_lo) = mid;
  }
  return k_hi;
}

struct HolderPair {
  double lhs = 0.0;
  double rhs = 0.0;
};

// Generalized Hoelder inequality data: lhs = |sum w u v|,
// rhs = 2 * ||u||_Lambda * ||v||_{Lambda-conjugate}; the caller asserts lhs <= rhs.
inline HolderPair holder_orlicz(const WeightedSamples& u, const WeightedSamples& v, const NFunction& nf) {
  if (u.weights.size() != v.weights.size() || u.weights != v.weights)
    throw WeightMismatch("holder_orlicz: samples must share quadrature weights");
  HolderPair out;
  for (std::size_t i = 0; i < u.values.size(); ++i) out.lhs += u.weights[i] * u.values[i] * v.values[i];
  out.lhs = std::fabs(out.lhs);
  NFunction conj;
  conj.lambda = nf.lambda_tilde;
  out.rhs = 2.0 * luxemburg_norm(u, nf, 1e-10) * luxemburg_norm(v, conj, 1e-10);
  return out;
}

// ---------------------------------------------------------------------------
// Registry of built-in nonlinearities.

inline NFunction make_power(double c, double r) {
  if (!(c > 0) || !(r > 0)) throw BadParameter("power nonlinearity: need c > 0 and r > 0");
  NFunction nf;
  nf.name = "power";
  nf.alpha = [c, r](double s) { return s == 0.0 ? 0.0 : c * pow_pos(std::fabs(s), r - 1.0) * s; };
  nf.lambda = [c, r](double t) { return c * pow_pos(std::fabs(t), r + 1.0) / (r + 1.0); };
  const double conj_coeff = r / (r + 1.0) * std::pow(c, -1.0 / r);
  const double conj_exp = (r + 1.0) / r;
  nf.lambda_tilde = [conj_coeff, conj_exp](double t) {
    return conj_coeff * pow_pos(std::fabs(t), conj_exp);
  };
  nf.range = RangeInterval{-inf, inf, true, true};
  nf.delta2_constant = std::pow(2.0, r + 1.0);
  if (r >= 1.0) nf.difference_constant = std::pow(2.0, 1.0 - r);
  return nf;
}

inline NFunction make_arctan() {
  NFunction nf;
  nf.name = "arctan";
  nf.alpha = [](double s) { return std::atan(s); };
  nf.lambda = [](double t) {
    const double a = std::fabs(t);
    return a * std::atan(a) - 0.5 * std::log1p(a * a);
  };
  nf.lambda_tilde = [](double t) {
    const double a = std::fabs(t);
    const double half_pi = std::atan(1.0) * 2.0;
    if (a >= half_pi) return inf;
    return -std::log(std::cos(a));
  };
  const double half_pi = std::atan(1.0) * 2.0;
  nf.range = RangeInterval{-half_pi, half_pi, true, true};
  nf.delta2_constant = 4.0;  // ratio lambda(2t)/lambda(t) decreases from 4 (t->0) to 2 (t->inf)
  return nf;
}

inline NFunction make_linear() {
  NFunction nf = make_power(1.0, 1.0);
  nf.name = "linear";
  return nf;
}

inline NFunction make_zero() {
  NFunction nf;
  nf.name = "zero";
  nf.alpha = [](double) { return 0.0; };
  nf.lambda = [](double) { return 0.0; };
  nf.lambda_tilde = [](double t) { return t == 0.0 ? 0.0 : inf; };
  nf.range = RangeInterval{0.0, 0.0, false, false};
  nf.delta2_constant = 1.0;
  nf.difference_constant = 1.0;
  return nf;
}

// Piecewise-linear density from samples (t_i, alpha(t_i)) with t_0 = 0,
// alpha(0) = 0, t strictly increasing, values nondecreasing.  Extended oddly to
// t < 0 and clamped (saturating) beyond the last sample, so the range is the
// closed interval [-a_max, a_max].
inline NFunction make_custom_table(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) throw BadParameter("custom table: need at least two points");
  if (points.front().first != 0.0) throw BadParameter("custom table: first abscissa must be 0");
  if (points.front().second != 0.0) throw NonzeroAtOrigin("custom table: alpha(0) must be 0");
  for (std::size_t i = 1; i < points.size(); ++i) {
    if (!(points[i].first > points[i - 1].first))
      throw BadParameter("custom table: abscissae must be strictly increasing");
    if (points[i].second < points[i - 1].second)
      throw NotMonotone("custom table: values must be nondecreasing");
  }
  std::vector<double> ts, as, cum;  // cum[i] = integral of alpha over [0, t_i]
  ts.reserve(points.size());
  as.reserve(points.size());
  cum.assign(points.size(), 0.0);
  for (const auto& p : points) {
    ts.push_back(p.first);
    as.push_back(p.second);
  }
  for (std::size_t i = 1; i < ts.size(); ++i)
    cum[i] = cum[i - 1] + 0.5 * (as[i] + as[i - 1]) * (ts[i] - ts[i - 1]);

  auto alpha_pos = [ts, as](double a) {
    if (a >= ts.back()) return as.back();
    const auto it = std::upper_bound(ts.begin(), ts.end(), a);
    const std::size_t i = static_cast<std::size_t>(it - ts.begin());  // a < ts[i], a >= ts[i-1]
    const double w = (a - ts[i - 1]) / (ts[i] - ts[i - 1]);
    return as[i - 1] + w * (as[i] - as[i - 1]);
  };
  NFunction nf;
  nf.name = "custom-table";
  nf.alpha = [alpha_pos](double s) {
    const double v = alpha_pos(std::fabs(s));
    return s < 0 ? -v : v;
  };
  nf.lambda = [ts, as, cum, alpha_pos](double t) {
    const double a = std::fabs(t);
    if (a >= ts.back()) return cum.back() + as.back() * (a - ts.back());
    const auto it = std::upper_bound(ts.begin(), ts.end(), a);
    const std::size_t i = static_cast<std::size_t>(it - ts.begin());
    const double d = a - ts[i - 1];
    return cum[i - 1] + as[i - 1] * d + 0.5 * (alpha_pos(a) - as[i - 1]) * d;
  };
  const double a_max = as.back();
  const ScalarFn alpha_copy = nf.alpha;
  nf.lambda_tilde = [alpha_copy, a_max](double t) {
    const double a = std::fabs(t);
    if (a > a_max) return inf;
    ScalarFn inv = [&alpha_copy](double s) { return detail::generalized_inverse(alpha_copy, s); };
    return detail::integrate_panels(inv, a, 0.0, 1e-10);
  };
  nf.range = RangeInterval{-a_max, a_max, false, false};
  return nf;
}

// CSV loader for "custom-table": lines "t,alpha", '#' comments allowed.
inline NFunction make_custom_table_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw BadParameter("custom table: cannot open '" + path + "'");
  std::vector<std::pair<double, double>> pts;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double t, a;
    if (!(ls >> t >> a))
      throw BadParameter(path + ":" + std::to_string(lineno) + ": expected 't,alpha'");
    pts.emplace_back(t, a);
  }
  return make_custom_table(pts);
}

// Name-keyed construction for config files.  Parameters:
//   power:        c (default 1), r (default 1)
//   custom-table: file=<csv path>
inline NFunction make_by_name(const std::string& name, const std::map<std::string, std::string>& params) {
  auto num = [&params](const std::string& key, double fallback) {
    const auto it = params.find(key);
    if (it == params.end()) return fallback;
    try {
      std::size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw BadParameter("nonlinearity parameter '" + key + "': bad number '" + it->second + "'");
    }
  };
  if (name == "power") return make_power(num("c", 1.0), num("r", 1.0));
  if (name == "arctan") return make_arctan();
  if (name == "linear") return make_linear();
  if (name == "zero") return make_zero();
  if (name == "custom-table") {
    const auto it = params.find("file");
    if (it == params.end()) throw BadParameter("custom-table nonlinearity: missing file=<path>");
    return make_custom_table_csv(it->second);
  }
  throw BadParameter("unknown nonlinearity '" + name + "'");
}

}  // namespace wentzell::orlicz
