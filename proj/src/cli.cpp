#include "coag/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "coag/analytic.hpp"
#include "coag/branching_mc.hpp"
#include "coag/io.hpp"
#include "coag/localization.hpp"
#include "coag/ode.hpp"
#include "coag/pgf.hpp"

#ifndef COAG_VERSION
#define COAG_VERSION "dev"
#endif

namespace coag {

namespace {

using nlohmann::json;

json real_or_null(double x) {
  return std::isfinite(x) ? json(x) : json(nullptr);
}

json gelation_json(const GelationReport& r) {
  auto blocks = json::array();
  for (const auto& b : r.blocks)
    blocks.push_back({{"components", b.components}, {"spectral_value", b.spectral_value}, {"T_c", real_or_null(b.t_c)}});
  return {{"T_c", r.t_c}, {"spectral_value", r.spectral_value}, {"reducible", r.reducible}, {"blocks", blocks}};
}

unsigned resolve_threads(unsigned flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("COAG_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::validation, "cannot write " + path);
  f << body;
}

struct Manifest {
  std::string command;
  std::vector<std::string> args;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void write(const std::string& path, const ModelSpec& spec, json extra) const {
    json doc = std::move(extra);
    doc["command"] = command;
    doc["args"] = args;
    doc["spec"] = model_to_json(spec);
    doc["spec_hash"] = spec_hash(spec);
    doc["tool_version"] = COAG_VERSION;
    doc["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_file(path, doc.dump(2) + "\n");
  }
};

std::string distribution_csv(const SizeDistribution& d) {
  std::ostringstream os;
  write_distribution_csv(os, d);
  return os.str();
}

std::string mc_csv(int m, const McEstimate& est) {
  std::ostringstream os;
  for (int i = 1; i <= m; ++i) os << "n_" << i << ',';
  os << "w,se\n";
  // Mixture over roots drawn by p: P(T = n) = |n| w_n.
  for (const auto& [n, cell] : est.cells) {
    for (int c : n.counts()) os << c << ',';
    os << format_real(cell.freq / n.total()) << ',' << format_real(cell.se / n.total()) << '\n';
  }
  return os.str();
}

void report_warnings(const ModelSpec& spec, std::ostream& err) {
  for (const auto& w : spec.report().warnings) err << "warning: " << w << '\n';
}

struct SolveArgs {
  std::string spec_file;
  double t = 0.0;
  int nmax = 30;
  std::string method = "analytic";
  std::string out;
  double dt = 1e-3;
  std::string form = "reduced";
  std::uint64_t replicates = 100'000;
  std::uint64_t seed = 1;
  std::uint64_t cap = 100'000;
};

int cmd_solve(const SolveArgs& a, unsigned threads, const Manifest& manifest, std::ostream& out, std::ostream& err) {
  const ModelSpec spec = read_model_file(a.spec_file);
  report_warnings(spec, err);
  json summary{{"method", a.method}, {"t", a.t}, {"nmax", a.nmax}};
  json extra{{"outputs", {a.out}}};
  std::string body;
  if (a.method == "analytic") {
    const AnalyticSolver solver(spec, a.t);
    const auto dist = solver.distribution({a.nmax});
    const Vector mass = mass_vector(dist);
    summary["mass"] = std::vector<double>(mass.data(), mass.data() + mass.size());
    summary["deficit"] = 1.0 - mass.sum();
    body = distribution_csv(dist);
  } else if (a.method == "ode") {
    OdeConfig cfg;
    cfg.dt = a.dt;
    cfg.form = a.form == "full" ? OdeForm::full : OdeForm::reduced;
    Snapshot snap;
    if (a.t == 0.0) {
      snap.dist = SizeDistribution::monodisperse(spec);
      snap.mass = mass_vector(snap.dist);
    } else {
      snap = integrate(spec, {a.nmax}, cfg, a.t).back();
    }
    summary["mass"] = std::vector<double>(snap.mass.data(), snap.mass.data() + snap.mass.size());
    summary["deficit"] = snap.deficit;
    summary["flux_out"] = snap.flux_out;
    extra["dt"] = a.dt;
    extra["form"] = a.form;
    body = distribution_csv(snap.dist);
  } else if (a.method == "mc") {
    McConfig cfg;
    cfg.replicates = a.replicates;
    cfg.seed = a.seed;
    cfg.population_cap = a.cap;
    cfg.threads = threads;
    const auto est = estimate_pmf(spec, a.t, cfg, {a.nmax});
    summary["censoring_rate"] = est.censoring_rate;
    summary["replicates"] = est.replicates;
    extra["seed"] = a.seed;
    extra["population_cap"] = a.cap;
    extra["censoring_rate"] = est.censoring_rate;
    body = mc_csv(spec.m(), est);
  } else {
    throw Error(ErrorKind::validation, "unknown method " + a.method);
  }
  write_file(a.out, body);
  manifest.write(a.out + ".manifest.json", spec, extra);
  out << summary.dump() << '\n';
  return kExitOk;
}

struct LocalizeArgs {
  std::string spec_file;
  double t = 0.0;
  std::vector<double> rate_rho;
  std::vector<int> n_list{50, 100, 200};
  std::string rate_out;
  double tol = 1e-10;
};

int cmd_localize(const LocalizeArgs& a, const Manifest& manifest, std::ostream& out, std::ostream& err) {
  const ModelSpec spec = read_model_file(a.spec_file);
  report_warnings(spec, err);
  MinimizeOptions opt;
  opt.tol = a.tol;
  const auto res = minimize_gamma(spec, a.t, opt);
  const Vector& r = res.rho_star.values();
  json doc{{"rho_star", std::vector<double>(r.data(), r.data() + r.size())},
           {"gamma_min", res.gamma_min},
           {"grad_norm", res.gradient_norm},
           {"iterations", res.iterations},
           {"boundary", res.boundary}};
  if (!a.rate_rho.empty()) {
    Vector w = Eigen::Map<const Vector>(a.rate_rho.data(), static_cast<Eigen::Index>(a.rate_rho.size()));
    if (w.size() != spec.m() || std::abs(w.sum() - 1.0) > 1e-9)
      throw Error(ErrorKind::validation, "--rate-check needs m entries summing to one");
    const auto seq = empirical_rate(spec, a.t, SimplexPoint::normalized(w), a.n_list);
    std::ostringstream csv;
    csv << "N,rate,extrapolated\n";
    for (const auto& pt : seq.points)
      csv << pt.n << ',' << format_real(pt.rate) << ',' << (seq.extrapolated ? format_real(*seq.extrapolated) : "")
          << '\n';
    doc["gamma_at_rate_rho"] = gamma(spec, a.t, SimplexPoint::normalized(w));
    if (seq.extrapolated) doc["extrapolated_rate"] = *seq.extrapolated;
    if (!a.rate_out.empty()) {
      write_file(a.rate_out, csv.str());
      manifest.write(a.rate_out + ".manifest.json", spec, {{"outputs", {a.rate_out}}});
    } else {
      err << csv.str();
    }
  }
  out << doc.dump() << '\n';
  return kExitOk;
}

struct CompareArgs {
  std::string spec_file;
  double t = 0.0;
  int nmax = 60;
  std::uint64_t replicates = 100'000;
  std::uint64_t seed = 1;
  double dt = 1e-3;
  double ode_tol = 1e-6;
  double deficit_tol = 1e-6;
  double mc_z = 4.0;
  double mc_min_prob = 1e-3;
  std::string manifest;
};

int cmd_compare(const CompareArgs& a, unsigned threads, const Manifest& manifest, std::ostream& out,
                std::ostream& err) {
  const ModelSpec spec = read_model_file(a.spec_file);
  report_warnings(spec, err);
  const AnalyticSolver solver(spec, a.t);
  const TruncationWindow window{a.nmax};
  const auto exact = solver.distribution(window);

  OdeConfig cfg;
  cfg.dt = a.dt;
  const auto snap = integrate(spec, window, cfg, a.t).back();
  double ode_gap = 0.0;
  const StateSpace states(spec.m(), window);
  for (std::size_t idx = 0; idx < states.size(); ++idx) {
    const auto n = states.composition(idx);
    ode_gap = std::max(ode_gap, std::abs(snap.dist.at(n) - exact.at(n)));
  }

  McConfig mc;
  mc.replicates = a.replicates;
  mc.seed = a.seed;
  mc.threads = threads;
  const auto est = estimate_pmf(spec, a.t, mc, window);
  double mc_z = 0.0;
  for (const auto& [n, w] : exact.entries) {
    const double prob = n.total() * w;
    if (prob < a.mc_min_prob) continue;
    const double se = std::sqrt(prob * (1.0 - prob) / static_cast<double>(est.replicates - est.censored));
    mc_z = std::max(mc_z, std::abs(est.at(n).freq - prob) / se);
  }

  const bool deficit_ok = snap.deficit < a.deficit_tol;
  const bool ode_ok = ode_gap < a.ode_tol;
  const bool mc_ok = mc_z <= a.mc_z;
  auto checks = json::array();
  checks.push_back({{"name", "truncation_deficit"}, {"value", snap.deficit}, {"tolerance", a.deficit_tol}, {"pass", deficit_ok}});
  checks.push_back({{"name", "ode_vs_analytic_max_abs"}, {"value", ode_gap}, {"tolerance", a.ode_tol}, {"pass", ode_ok}});
  checks.push_back({{"name", "mc_vs_analytic_max_z"}, {"value", mc_z}, {"tolerance", a.mc_z}, {"pass", mc_ok}});

  std::string attribution = "none";
  if (!deficit_ok)
    attribution = "truncation";
  else if (!ode_ok)
    attribution = "ode discretization";
  else if (!mc_ok)
    attribution = "monte carlo";
  const bool pass = deficit_ok && ode_ok && mc_ok;
  json doc{{"t", a.t},
           {"T_c", solver.critical_time()},
           {"nmax", a.nmax},
           {"dt", a.dt},
           {"mc_replicates", a.replicates},
           {"censoring_rate", est.censoring_rate},
           {"checks", checks},
           {"verdict", pass ? "PASS" : "FAIL"},
           {"attribution", attribution}};
  if (!a.manifest.empty()) manifest.write(a.manifest, spec, {{"seed", a.seed}, {"report", doc}});
  out << doc.dump(2) << '\n';
  return pass ? kExitOk : kExitCheckFailed;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation:
      return kExitValidation;
    case ErrorKind::criticality:
      return kExitCriticality;
    case ErrorKind::hypothesis:
      return kExitHypothesis;
    case ErrorKind::numerical:
      return kExitNumerical;
  }
  return kExitNumerical;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multicomponent coagulation with multiplicative kernel", "coag"};
  app.require_subcommand(1);
  app.fallthrough();
  unsigned threads_flag = 0;
  app.add_option("--threads", threads_flag, "Worker threads (default: COAG_THREADS or core count)");

  std::string gel_spec;
  auto* gel = app.add_subcommand("gelation", "Print the gelation time report");
  gel->add_option("spec", gel_spec, "Model JSON file")->required();

  SolveArgs solve;
  auto* sol = app.add_subcommand("solve", "Write the size distribution at time t");
  sol->add_option("spec", solve.spec_file, "Model JSON file")->required();
  sol->add_option("--t", solve.t, "Time")->required()->check(CLI::NonNegativeNumber);
  sol->add_option("--nmax", solve.nmax, "Largest cluster size kept")->check(CLI::PositiveNumber);
  sol->add_option("--method", solve.method)->check(CLI::IsMember({"ode", "analytic", "mc"}));
  sol->add_option("--out", solve.out, "CSV output path")->required();
  sol->add_option("--dt", solve.dt, "ODE step")->check(CLI::PositiveNumber);
  sol->add_option("--form", solve.form, "ODE form")->check(CLI::IsMember({"full", "reduced"}));
  sol->add_option("--replicates", solve.replicates, "Monte Carlo replicates")->check(CLI::PositiveNumber);
  sol->add_option("--seed", solve.seed, "Monte Carlo seed");
  sol->add_option("--cap", solve.cap, "Population cap for censoring")->check(CLI::PositiveNumber);

  LocalizeArgs loc;
  auto* lz = app.add_subcommand("localize", "Minimize the rate function over the simplex");
  lz->add_option("spec", loc.spec_file, "Model JSON file")->required();
  lz->add_option("--t", loc.t, "Time")->required();
  lz->add_option("--rate-check", loc.rate_rho, "Direction rho for the empirical rate")->delimiter(',');
  lz->add_option("--N-list", loc.n_list, "Sizes N for the empirical rate")->delimiter(',');
  lz->add_option("--rate-out", loc.rate_out, "CSV path for the rate sequence");
  lz->add_option("--tol", loc.tol, "Tangent-gradient tolerance");

  CompareArgs cmp;
  auto* cm = app.add_subcommand("compare", "Cross-check ODE, analytic and Monte Carlo routes");
  cm->add_option("spec", cmp.spec_file, "Model JSON file")->required();
  cm->add_option("--t", cmp.t, "Time")->required();
  cm->add_option("--nmax", cmp.nmax)->check(CLI::PositiveNumber);
  cm->add_option("--mc-replicates", cmp.replicates)->check(CLI::PositiveNumber);
  cm->add_option("--seed", cmp.seed);
  cm->add_option("--dt", cmp.dt)->check(CLI::PositiveNumber);
  cm->add_option("--ode-tol", cmp.ode_tol);
  cm->add_option("--deficit-tol", cmp.deficit_tol);
  cm->add_option("--mc-z", cmp.mc_z);
  cm->add_option("--manifest", cmp.manifest, "Write a run manifest here");

  std::string replay_path;
  auto* rp = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  rp->add_option("manifest", replay_path)->required();

  std::vector<std::string> argv_store{"coag"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  Manifest manifest;
  manifest.args = args;
  const unsigned threads = resolve_threads(threads_flag);
  try {
    if (*gel) {
      const ModelSpec spec = read_model_file(gel_spec);
      report_warnings(spec, err);
      out << gelation_json(gelation_time(spec)).dump() << '\n';
      return kExitOk;
    }
    if (*sol) {
      manifest.command = "solve";
      return cmd_solve(solve, threads, manifest, out, err);
    }
    if (*lz) {
      manifest.command = "localize";
      return cmd_localize(loc, manifest, out, err);
    }
    if (*cm) {
      manifest.command = "compare";
      return cmd_compare(cmp, threads, manifest, out, err);
    }
    if (*rp) {
      std::ifstream in(replay_path);
      if (!in) throw Error(ErrorKind::validation, "cannot open manifest " + replay_path);
      json doc;
      try {
        in >> doc;
      } catch (const json::exception& e) {
        throw Error(ErrorKind::validation, replay_path + ": " + e.what());
      }
      return run_cli(doc.at("args").get<std::vector<std::string>>(), out, err);
    }
  } catch (const Error& e) {
    err << json{{"error", e.what()}}.dump() << '\n';
    return exit_code_for(e.kind());
  }
  return kExitValidation;
}

}  // namespace coag
