// Experiment driver around the wentzell library: builds meshes and problem
// specs from INI-style configuration files and runs one of the subcommands
//
//   solve             minimize the configured problem, write solution + report
//   check-solvability classify the data mean against the solvability interval
//   orlicz-check      doubling / conjugate-growth / Young spot checks
//   threshold-sweep   scan data means across the solvability interval
//   stability-sweep   paired solves at shrinking data offsets
//   mesh-dump         write the mesh in the plain-text mesh format
//
// All CSV output uses 17 significant digits, '\n' line endings and a header
// row, so identical configurations reproduce byte-identical files.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "CLI11.hpp"
#include "wentzell/config.hpp"
#include "wentzell/domain.hpp"
#include "wentzell/estimates.hpp"
#include "wentzell/forms.hpp"
#include "wentzell/orlicz.hpp"
#include "wentzell/resonance.hpp"
#include "wentzell/solver.hpp"

namespace cfg = wentzell::config;
namespace dm = wentzell::domain;
namespace fm = wentzell::forms;
namespace oz = wentzell::orlicz;
namespace rs = wentzell::resonance;
namespace sv = wentzell::solver;
namespace es = wentzell::estimates;
using wentzell::Rng;

namespace {

struct Options {
  std::string config_path;
  std::string out_path;  // empty: use [output] csv, then the per-command default
  long seed = -1;        // <0: use [solver] seed
  bool quiet = false;
};

std::string num17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_colon(const std::string& s) {
  std::vector<std::string> parts;
  std::string item;
  std::istringstream ss(s);
  while (std::getline(ss, item, ':')) parts.push_back(item);
  return parts;
}

[[noreturn]] void bad_value(const cfg::Config& c, const cfg::Entry& e, const std::string& msg) {
  throw cfg::ParseError(c.path + ":" + std::to_string(e.line) + ": " + msg + " (got '" +
                        e.value + "')");
}

std::ofstream open_csv(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw wentzell::Error("cannot open output file '" + path + "'");
  return out;
}

std::string out_path_for(const cfg::Config& c, const Options& opt, const std::string& fallback) {
  if (!opt.out_path.empty()) return opt.out_path;
  return c.get_string("output", "csv", fallback);
}

long effective_seed(const cfg::Config& c, const Options& opt) {
  if (opt.seed >= 0) return opt.seed;
  return c.get_long("solver", "seed", 0);
}

double solver_ceiling(const cfg::Config& c) {
  const double ceiling = c.get_double("solver", "ceiling", 1e6);
  if (!(ceiling > 0)) bad_value(c, *c.find("solver", "ceiling"), "ceiling must be positive");
  return ceiling;
}

// ---------------------------------------------------------------------------
// Config -> library objects.

dm::DiscreteDomain build_domain(const cfg::Config& c) {
  const cfg::Entry* kind = c.find("domain", "kind");
  if (!kind) c.missing("domain", "kind");
  if (kind->value == "interval") {
    const int n = static_cast<int>(c.get_long("domain", "n_cells", 8));
    const double length = c.get_double("domain", "length", 1.0);
    const double bl = c.get_double("domain", "b_left", 1.0);
    const double br = c.get_double("domain", "b_right", 1.0);
    return dm::build_interval(n, length, bl, br);
  }
  if (kind->value == "rectangle") {
    const int nx = static_cast<int>(c.get_long("domain", "nx", 8));
    const int ny = static_cast<int>(c.get_long("domain", "ny", 8));
    const double lx = c.get_double("domain", "lx", 1.0);
    const double ly = c.get_double("domain", "ly", 1.0);
    const cfg::Entry* b = c.find("domain", "b");
    if (!b) return dm::build_rectangle(nx, ny, lx, ly, 1.0);
    const auto parts = split_colon(b->value);
    if (parts[0] == "constant" && parts.size() == 2) {
      cfg::Entry v{parts[1], b->line};
      return dm::build_rectangle(nx, ny, lx, ly, c.parse_number(v, "b"));
    }
    if (parts[0] == "affine" && parts.size() == 4) {
      double coef[3];
      for (int i = 0; i < 3; ++i) {
        cfg::Entry v{parts[static_cast<std::size_t>(i + 1)], b->line};
        coef[i] = c.parse_number(v, "b");
      }
      return dm::build_rectangle(nx, ny, lx, ly, [=](double x, double y) {
        return coef[0] + coef[1] * x + coef[2] * y;
      });
    }
    bad_value(c, *b, "weight must be 'constant:V' or 'affine:A:BX:BY'");
  }
  bad_value(c, *kind, "domain kind must be 'interval' or 'rectangle'");
}

oz::NFunction build_alpha(const cfg::Config& c, const std::string& key) {
  const cfg::Entry* e = c.find("problem", key);
  if (!e) c.missing("problem", key);
  const auto parts = split_colon(e->value);
  std::map<std::string, std::string> params;
  if (parts[0] == "power") {
    if (parts.size() > 1) params["c"] = parts[1];
    if (parts.size() > 2) params["r"] = parts[2];
  } else if (parts[0] == "custom-table") {
    if (parts.size() != 2) bad_value(c, *e, "custom-table needs 'custom-table:PATH'");
    params["file"] = parts[1];
  } else if (parts.size() != 1) {
    bad_value(c, *e, "nonlinearity '" + parts[0] + "' takes no parameters");
  }
  try {
    return oz::make_by_name(parts[0], params);
  } catch (const wentzell::Error& err) {
    bad_value(c, *e, err.what());
  }
}

void fill_data(const cfg::Config& c, const std::string& key, std::size_t n, Rng& rng,
               std::vector<double>& out) {
  out.assign(n, 0.0);
  const cfg::Entry* e = c.find("problem", key);
  if (!e) return;  // data defaults to zero
  const auto parts = split_colon(e->value);
  if (parts[0] == "constant" && parts.size() == 2) {
    cfg::Entry v{parts[1], e->line};
    out.assign(n, c.parse_number(v, key));
    return;
  }
  if (parts[0] == "random" && parts.size() == 3) {
    cfg::Entry vlo{parts[1], e->line}, vhi{parts[2], e->line};
    const double lo = c.parse_number(vlo, key), hi = c.parse_number(vhi, key);
    if (!(lo <= hi)) bad_value(c, *e, "random range needs LO <= HI");
    for (auto& v : out) v = rng.uniform(lo, hi);
    return;
  }
  if (parts[0] == "table" && parts.size() == 2) {
    // Inline per-node table: comma-separated values, one per node in id order.
    std::vector<std::string> items;
    std::stringstream ss(parts[1]);
    for (std::string item; std::getline(ss, item, ',');) items.push_back(item);
    if (items.size() != n)
      bad_value(c, *e, "table needs exactly " + std::to_string(n) + " values, got " +
                           std::to_string(items.size()));
    for (std::size_t i = 0; i < n; ++i) {
      cfg::Entry v{items[i], e->line};
      out[i] = c.parse_number(v, key);
    }
    return;
  }
  if (parts[0] == "file" && parts.size() == 2) {
    std::ifstream in(parts[1]);
    if (!in) bad_value(c, *e, "cannot open data file '" + parts[1] + "'");
    for (std::size_t i = 0; i < n; ++i)
      if (!(in >> out[i]))
        bad_value(c, *e, "data file '" + parts[1] + "' holds fewer than " + std::to_string(n) +
                             " values");
    return;
  }
  bad_value(c, *e, "data must be 'constant:V', 'random:LO:HI', 'table:V0,V1,...' or 'file:PATH'");
}

fm::ProblemSpec build_spec(const cfg::Config& c, Rng& rng) {
  fm::ProblemSpec spec;
  spec.dom = build_domain(c);
  spec.p = c.get_double("problem", "p", 2.0);
  spec.q = c.get_double("problem", "q", 2.0);
  spec.rho = c.get_double("problem", "rho", 1.0);
  const cfg::Entry* mode = c.find("problem", "mode");
  if (!mode) c.missing("problem", "mode");
  if (mode->value == "resonant") spec.mode = fm::Mode::Resonant;
  else if (mode->value == "perturbed") spec.mode = fm::Mode::Perturbed;
  else bad_value(c, *mode, "mode must be 'resonant' or 'perturbed'");
  spec.alpha1 = build_alpha(c, "alpha1");
  spec.alpha2 = build_alpha(c, "alpha2");
  fill_data(c, "f", spec.dom.n_nodes(), rng, spec.f);
  fill_data(c, "g", spec.dom.n_boundary(), rng, spec.g);
  fm::check_spec(spec);
  return spec;
}

// ---------------------------------------------------------------------------
// Ordered parallel map: worker count from WENTZELL_THREADS, results written
// in input order by the caller after the join.

template <typename Fn>
void parallel_for_ordered(std::size_t n, Fn fn) {
  std::size_t workers = std::thread::hardware_concurrency();
  if (const char* env = std::getenv("WENTZELL_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v > 0) workers = static_cast<std::size_t>(v);
  }
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// Subcommands.

int cmd_solve(const Options& opt) {
  const cfg::Config c = cfg::parse_file(opt.config_path);
  Rng rng(static_cast<std::uint64_t>(effective_seed(c, opt)));
  const auto spec = build_spec(c, rng);
  const double tol = c.get_double("solver", "tol", 1e-8);
  const long max_iter = c.get_long("solver", "max_iter", 200000);
  const double ceiling = solver_ceiling(c);

  const auto rep = spec.mode == fm::Mode::Resonant
                       ? sv::solve_resonant(spec, tol, max_iter, ceiling)
                       : sv::solve_perturbed(spec, tol, max_iter, ceiling);

  const std::string sol_path = out_path_for(c, opt, "solution.csv");
  auto sol = open_csv(sol_path);
  sol << "id,x,y,value\n";
  const auto& values = rep.solution ? rep.solution->interior : rep.last_iterate.interior;
  for (std::size_t i = 0; i < values.size(); ++i)
    sol << i << ',' << num17(spec.dom.nodes[i].x) << ',' << num17(spec.dom.nodes[i].y) << ','
        << num17(values[i]) << '\n';

  auto report = open_csv(sol_path + ".report.csv");
  report << "verdict,iterations,final_residual_inf,final_energy,final_sup_norm\n";
  report << sv::verdict_name(rep.verdict) << ',' << rep.iterations << ','
         << num17(rep.final_residual_inf) << ',' << num17(rep.final_energy) << ','
         << num17(rep.final_sup_norm) << '\n';

  if (!opt.quiet)
    std::printf("%s after %ld iterations, residual %.3e\n", sv::verdict_name(rep.verdict),
                rep.iterations, rep.final_residual_inf);
  switch (rep.verdict) {
    case sv::Verdict::Converged: return 0;
    case sv::Verdict::Diverged: return 2;
    case sv::Verdict::MaxIterations: return 3;
  }
  return 1;
}

int cmd_check_solvability(const Options& opt) {
  const cfg::Config c = cfg::parse_file(opt.config_path);
  Rng rng(static_cast<std::uint64_t>(effective_seed(c, opt)));
  const auto spec = build_spec(c, rng);
  if (spec.mode != fm::Mode::Resonant)
    bad_value(c, *c.find("problem", "mode"), "check-solvability requires mode = resonant");
  const auto verdict = rs::solvability(spec);

  auto out = open_csv(out_path_for(c, opt, "solvability.csv"));
  out << "mean,lo,hi,lo_open,hi_open,classification\n";
  out << rs::verdict_csv_row(verdict) << '\n';
  if (!opt.quiet)
    std::printf("%s (mean %.17g)\n", rs::classification_name(verdict.classification),
                verdict.mean_total);
  switch (verdict.classification) {
    case rs::Classification::StrictlySolvable: return 0;
    case rs::Classification::Unsolvable: return 2;
    case rs::Classification::BoundaryCase: return 4;
  }
  return 1;
}

int cmd_orlicz_check(const Options& opt) {
  const cfg::Config c = cfg::parse_file(opt.config_path);
  const double gmin = c.get_double("orlicz", "grid_min", 1e-6);
  const double gmax = c.get_double("orlicz", "grid_max", 1e6);
  const int gpts = static_cast<int>(c.get_long("orlicz", "grid_points", 241));
  const double young_tol = c.get_double("orlicz", "young_tol", 1e-8);
  const auto grid = wentzell::log_grid(gmin, gmax, gpts);
  const auto young_grid = wentzell::log_grid(1e-3, 1e3, 25);

  std::vector<std::string> keys;
  for (const char* k : {"alpha1", "alpha2"})
    if (c.find("problem", k)) keys.push_back(k);
  if (keys.empty()) c.missing("problem", "alpha1");

  auto out = open_csv(out_path_for(c, opt, "orlicz.csv"));
  out << "which,name,delta2_satisfied,delta2_constant,declared_delta2,nabla2_holds,nabla2_c,"
         "young_violations,young_equality_gap\n";

  bool all_ok = true;
  for (const auto& key : keys) {
    const auto nf = build_alpha(c, key);
    const auto d2 = oz::check_delta2(nf, grid);
    bool ok = d2.satisfied;

    std::string declared = "", n2_holds = "", n2_c = "";
    if (nf.delta2_constant) {
      declared = num17(*nf.delta2_constant);
      ok = ok && d2.constant <= *nf.delta2_constant * (1.0 + 1e-9);
      const auto n2 = oz::check_nabla2_from_delta2(nf, grid);
      n2_holds = n2.holds ? "1" : "0";
      n2_c = num17(n2.c_used);
      ok = ok && n2.holds;
    }

    // Young inequality s*t <= Lambda(s) + conj(t) on the spot grid, and the
    // equality case at t = alpha(s).  The conjugate may be quadrature-backed
    // (table nonlinearities), so evaluate it once per grid point.
    std::vector<double> conj_grid(young_grid.size());
    for (std::size_t j = 0; j < young_grid.size(); ++j)
      conj_grid[j] = nf.lambda_tilde(young_grid[j]);
    long violations = 0;
    double eq_gap = 0.0;
    for (double s : young_grid) {
      const double lam = nf.lambda(s);
      for (std::size_t j = 0; j < young_grid.size(); ++j) {
        const double t = young_grid[j];
        const double rhs = lam + conj_grid[j];
        if (rhs == wentzell::inf) continue;
        if (s * t > rhs + 1e-12 * (1.0 + s * t)) ++violations;
      }
      const double ts = nf.alpha(s);
      const double conj = nf.lambda_tilde(ts);
      if (conj != wentzell::inf) {
        const double prod = s * ts;
        eq_gap = std::max(eq_gap, std::abs(lam + conj - prod) / (1.0 + std::abs(prod)));
      }
    }
    ok = ok && violations == 0 && eq_gap <= young_tol;

    out << key << ',' << nf.name << ',' << (d2.satisfied ? 1 : 0) << ',' << num17(d2.constant)
        << ',' << declared << ',' << n2_holds << ',' << n2_c << ',' << violations << ','
        << num17(eq_gap) << '\n';
    if (!opt.quiet)
      std::printf("%s (%s): doubling %s, %ld Young violations\n", key.c_str(), nf.name.c_str(),
                  d2.satisfied ? "ok" : "FAILED", violations);
    all_ok = all_ok && ok;
  }
  return all_ok ? 0 : 2;
}

int cmd_threshold_sweep(const Options& opt) {
  const cfg::Config c = cfg::parse_file(opt.config_path);
  Rng rng(static_cast<std::uint64_t>(effective_seed(c, opt)));
  auto spec = build_spec(c, rng);
  if (spec.mode != fm::Mode::Resonant)
    bad_value(c, *c.find("problem", "mode"), "threshold-sweep requires mode = resonant");
  const double tol = c.get_double("solver", "tol", 1e-8);
  const long max_iter = c.get_long("solver", "max_iter", 200000);
  const double ceiling = solver_ceiling(c);
  const auto multipliers = c.get_list("sweep", "multipliers");

  const auto base = rs::solvability(spec);
  const auto interval = base.interval;
  if (interval.lo == -wentzell::inf || interval.hi == wentzell::inf)
    throw wentzell::Error("threshold-sweep requires a bounded solvability interval");
  const double half = 0.5 * (interval.hi - interval.lo);
  const double lambda1 = dm::measures(spec.dom).lambda1;

  struct Row {
    rs::Classification cls;
    sv::Verdict verdict;
    long iterations;
    double u_inf;
  };
  std::vector<Row> rows(multipliers.size());
  parallel_for_ordered(multipliers.size(), [&](std::size_t i) {
    // Multiplier m targets the total data mean m * (interval half-width): for
    // an interval symmetric about zero, |m| < 1 lands strictly inside and
    // |m| > 1 strictly outside.  The configured data profile is kept and
    // shifted by a constant.
    fm::ProblemSpec point = spec;
    const double shift = (multipliers[i] * half - base.mean_total) / lambda1;
    for (auto& v : point.f) v += shift;
    const auto verdict = rs::solvability(point);
    const auto rep = sv::solve_resonant(point, tol, max_iter, ceiling);
    rows[i] = Row{verdict.classification, rep.verdict, rep.iterations, rep.final_sup_norm};
  });

  auto out = open_csv(out_path_for(c, opt, "threshold_sweep.csv"));
  out << "m,solvability,solver_verdict,iterations,u_inf\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << num17(multipliers[i]) << ',' << rs::classification_name(rows[i].cls) << ','
        << sv::verdict_name(rows[i].verdict) << ',' << rows[i].iterations << ','
        << num17(rows[i].u_inf) << '\n';
    if (!opt.quiet)
      std::printf("m=%g: %s, %s\n", multipliers[i], rs::classification_name(rows[i].cls),
                  sv::verdict_name(rows[i].verdict));
  }
  return 0;
}

int cmd_stability_sweep(const Options& opt) {
  const cfg::Config c = cfg::parse_file(opt.config_path);
  Rng rng(static_cast<std::uint64_t>(effective_seed(c, opt)));
  const auto base = build_spec(c, rng);
  if (base.mode != fm::Mode::Perturbed)
    bad_value(c, *c.find("problem", "mode"), "stability-sweep requires mode = perturbed");
  const double tol = c.get_double("solver", "tol", 1e-10);
  const long max_iter = c.get_long("solver", "max_iter", 200000);
  const double p1 = c.get_double("sweep", "p1", 2.0);
  const double q1 = c.get_double("sweep", "q1", 2.0);
  const auto epsilons = c.get_list("sweep", "epsilons");

  std::vector<es::StabilityReport> reports(epsilons.size());
  parallel_for_ordered(epsilons.size(), [&](std::size_t i) {
    fm::ProblemSpec pert = base;
    for (auto& v : pert.f) v += epsilons[i];
    reports[i] = es::linf_stability_check(base, pert, p1, q1, tol, max_iter);
  });

  auto out = open_csv(out_path_for(c, opt, "stability_sweep.csv"));
  out << "epsilon,lhs,df_norm,dg_norm,C_fit\n";
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    out << num17(epsilons[i]) << ',' << num17(r.lhs) << ',' << num17(r.df_norm) << ','
        << num17(r.dg_norm) << ',' << num17(r.C_fit) << '\n';
    if (!opt.quiet)
      std::printf("eps=%g: lhs=%.6e C_fit=%.6e\n", epsilons[i], r.lhs, r.C_fit);
  }

  std::vector<double> cfits;
  for (const auto& r : reports) cfits.push_back(r.C_fit);
  std::sort(cfits.begin(), cfits.end());
  const double median = cfits[cfits.size() / 2];
  const double worst = cfits.back();
  return worst <= 100.0 * median ? 0 : 2;
}

int cmd_mesh_dump(const Options& opt) {
  const cfg::Config c = cfg::parse_file(opt.config_path);
  const auto dom = build_domain(c);
  const std::string path = out_path_for(c, opt, "mesh.txt");
  dm::dump_mesh(dom, path);
  if (!opt.quiet)
    std::printf("wrote %zu nodes, %zu elements to %s\n", dom.n_nodes(), dom.elements.size(),
                path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quasilinear elliptic solver with nonlinear dynamic boundary conditions"};
  app.require_subcommand(1);

  Options opt;
  int (*run)(const Options&) = nullptr;
  for (const auto& [name, desc, fn] :
       std::vector<std::tuple<const char*, const char*, int (*)(const Options&)>>{
           {"solve", "minimize the configured problem", cmd_solve},
           {"check-solvability", "classify the data mean against the solvability interval",
            cmd_check_solvability},
           {"orlicz-check", "doubling / conjugate / Young checks for the nonlinearities",
            cmd_orlicz_check},
           {"threshold-sweep", "scan data means across the solvability interval",
            cmd_threshold_sweep},
           {"stability-sweep", "paired solves at shrinking data offsets", cmd_stability_sweep},
           {"mesh-dump", "write the mesh in the plain-text mesh format", cmd_mesh_dump}}) {
    auto* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", opt.config_path, "configuration file")->required();
    sub->add_option("--out", opt.out_path, "output CSV path");
    sub->add_option("--seed", opt.seed, "override the configured random seed");
    sub->add_flag("--quiet", opt.quiet, "suppress progress output");
    sub->callback([&run, fn] { run = fn; });
  }

  CLI11_PARSE(app, argc, argv);
  try {
    return run(opt);
  } catch (const cfg::ParseError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const wentzell::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
