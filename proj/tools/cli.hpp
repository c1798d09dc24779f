#pragma once

// The ctcurve command-line front end, kept in a header so the tests can drive
// it in-process.
//
// Exit codes: 0 success, 1 numeric failure or failed validation, 2 bad
// configuration. Every error is one line: `ctcurve: error[<code>]: <message>`.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ctcurve/closedform.hpp"
#include "ctcurve/io.hpp"
#include "ctcurve/oracle.hpp"
#include "ctcurve/validate.hpp"

namespace ctcurve::cli {

enum class Source { closed_form, oracle, both };
enum class Format { csv, json };

struct RunConfig {
  std::string command;
  double tau = 1.0;
  std::vector<double> taus;
  double t_min = 0.05;
  double t_max = 0.95;
  int samples = 181;
  Source source = Source::closed_form;
  Format format = Format::csv;
  bool format_given = false;
  std::string output_path;
  std::optional<double> tol_distance;
  double ode_tol = 1e-10;
  int max_terms = 400;
  double tail_tol = 1e-14;

  SeriesControl control() const {
    SeriesControl c;
    c.max_terms = max_terms;
    c.tail_tolerance = tail_tol;
    return c;
  }

  ComparisonOptions comparison() const {
    ComparisonOptions o;
    if (tol_distance) o.distance_tol = *tol_distance;
    return o;
  }
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

inline int report_error(std::ostream& err, std::string_view code, const std::string& message,
                        std::optional<double> at_t = std::nullopt) {
  std::string line = message;
  for (char& c : line)
    if (c == '\n' || c == '\r') c = ' ';
  err << "ctcurve: error[" << code << "]: " << line;
  if (at_t) err << " (t=" << format_double(*at_t) << ")";
  err << '\n';
  return code == "config" ? kExitConfig : kExitFailure;
}

inline const char* extension(Format f) { return f == Format::csv ? "csv" : "json"; }

/// -o if given, else a default name under $CTCURVE_OUTPUT_DIR (or the working
/// directory).
inline std::filesystem::path output_path(const RunConfig& cfg, const std::string& default_name) {
  if (!cfg.output_path.empty()) return cfg.output_path;
  const char* dir = std::getenv("CTCURVE_OUTPUT_DIR");
  return std::filesystem::path(dir && *dir ? dir : ".") / default_name;
}

inline void print_truncation(std::ostream& out, double tau, const std::optional<Truncation>& tr) {
  if (!tr) return;
  out << "truncated: tau=" << format_double(tau) << " requested [" << format_double(tr->requested_lo) << ", "
      << format_double(tr->requested_hi) << "] achieved [" << format_double(tr->achieved_lo) << ", "
      << format_double(tr->achieved_hi) << "]: " << tr->reason << '\n';
}

inline void validate_window(const RunConfig& cfg, bool allow_single = false) {
  if (!(cfg.t_min > 0.0 && cfg.t_min < 1.0 && cfg.t_max > 0.0 && cfg.t_max < 1.0))
    throw Error(ErrorCode::config, "t-min and t-max must lie in (0, 1)");
  if (!(cfg.t_min < cfg.t_max) && !(allow_single && cfg.t_min == cfg.t_max))
    throw Error(ErrorCode::config, "t-min must be smaller than t-max");
  if (cfg.samples < 2 && !allow_single) throw Error(ErrorCode::config, "--samples must be at least 2");
  if (cfg.samples < 1) throw Error(ErrorCode::config, "--samples must be positive");
  if (!(cfg.ode_tol > 0.0)) throw Error(ErrorCode::config, "--ode-tol must be positive");
  if (cfg.tol_distance && !(*cfg.tol_distance > 0.0)) throw Error(ErrorCode::config, "--tol-distance must be positive");
  cfg.control().validate();
}

inline void validate_tau(double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw Error(ErrorCode::config, "torsion must be a positive number");
}

inline std::string tau_tag(double tau) { return "tau" + format_double(tau); }

// ---------------------------------------------------------------------------

inline int cmd_sample(const RunConfig& cfg, Streams io) {
  validate_tau(cfg.tau);
  validate_window(cfg);
  const std::vector<double> ts = uniform_grid(cfg.t_min, cfg.t_max, cfg.samples);
  const auto path = output_path(cfg, "curve_" + tau_tag(cfg.tau) + "." + extension(cfg.format));

  std::string text;
  if (cfg.source == Source::closed_form) {
    const SampledCurve c = ClosedFormCurve(cfg.tau, cfg.control()).sample(ts);
    text = cfg.format == Format::csv ? curve_csv(c) : dump(curve_document(c));
  } else {
    const ClosedFormCurve cf(cfg.tau, cfg.control());
    const CurveParams params{cfg.tau, 0.0, ClosedFormCurve::kT0};
    const FrenetOracle oracle(params, cf.initial_state(), cfg.t_min, cfg.t_max, cfg.ode_tol);
    const SampledCurve ode = oracle.sample(ts);
    print_truncation(io.out, cfg.tau, ode.truncation);
    if (cfg.source == Source::oracle) {
      text = cfg.format == Format::csv ? curve_csv(ode) : dump(curve_document(ode));
    } else {
      const PairedCurve pc{cf.sample(ts), ode};
      text = cfg.format == Format::csv ? paired_csv(pc) : dump(paired_document(pc));
      io.out << "max paired distance: " << format_double(pc.max_distance()) << '\n';
    }
  }
  write_file_atomic(path, text);
  io.out << "wrote " << path.string() << '\n';
  return kExitOk;
}

inline void print_report(std::ostream& out, const ValidationReport& r) {
  out << (r.pass() ? "PASS " : "FAIL ") << r.case_id;
  for (const auto& [name, m] : r.metrics)
    out << ' ' << name << '=' << format_double(m.value) << (m.pass ? "" : "(>" + format_double(m.tolerance) + ")");
  out << '\n';
  print_truncation(out, r.tau, r.truncation);
}

inline int cmd_compare(const RunConfig& cfg, Streams io) {
  validate_tau(cfg.tau);
  validate_window(cfg, true);
  const ValidationReport rep = run_comparison(cfg.tau, {cfg.t_min, cfg.t_max}, cfg.samples, cfg.control(),
                                              cfg.ode_tol, cfg.comparison());
  const ClosedFormCurve cf(cfg.tau, cfg.control());
  const std::vector<double> ts = uniform_grid(cfg.t_min, cfg.t_max, cfg.t_min == cfg.t_max ? 1 : cfg.samples);
  const FrenetOracle oracle({cfg.tau, 0.0, ClosedFormCurve::kT0}, cf.initial_state(), cfg.t_min, cfg.t_max,
                            cfg.ode_tol);
  const PairedCurve pc{cf.sample(ts), oracle.sample(ts)};
  const Format fmt = cfg.format_given ? cfg.format : Format::json;
  const auto path = output_path(cfg, "compare_" + tau_tag(cfg.tau) + "." + extension(fmt));
  write_file_atomic(path, fmt == Format::csv ? paired_csv(pc) : dump(paired_document(pc, rep)));
  print_report(io.out, rep);
  io.out << "wrote " << path.string() << '\n';
  return rep.pass() ? kExitOk : kExitFailure;
}

inline std::vector<double> residual_points() {
  std::vector<double> pts;
  for (int i = 1; i <= 9; ++i) pts.push_back(0.1 * i);
  return pts;
}

inline int cmd_validate(const RunConfig& cfg, Streams io) {
  if (cfg.format_given && cfg.format == Format::csv)
    throw Error(ErrorCode::config, "validate writes JSON reports only");
  validate_window(cfg);
  const std::vector<double> taus = cfg.taus.empty() ? std::vector<double>{0.5, 1.0, 2.0} : cfg.taus;
  for (double tau : taus) validate_tau(tau);

  struct Case {
    ValidationReport comparison, residual;
  };
  std::vector<std::future<Case>> jobs;
  for (double tau : taus)
    jobs.push_back(std::async(std::launch::async, [&cfg, tau] {
      return Case{run_comparison(tau, {cfg.t_min, cfg.t_max}, cfg.samples, cfg.control(), cfg.ode_tol,
                                 cfg.comparison()),
                  ode_residual_sweep(tau, residual_points(), cfg.control())};
    }));

  json cases = json::array();
  bool all = true;
  for (auto& job : jobs) {
    const Case c = job.get();
    for (const ValidationReport* r : {&c.comparison, &c.residual}) {
      print_report(io.out, *r);
      cases.push_back(to_json(*r));
      all = all && r->pass();
    }
  }
  json params = {{"taus", taus},
                 {"t_window", {cfg.t_min, cfg.t_max}},
                 {"samples", cfg.samples},
                 {"ode_tol", cfg.ode_tol},
                 {"max_terms", cfg.max_terms},
                 {"tail_tol", cfg.tail_tol}};
  const json doc = {{"params", params}, {"samples", json::array()}, {"report", {{"pass", all}, {"cases", cases}}}};
  const auto path = output_path(cfg, "validate.json");
  write_file_atomic(path, dump(doc));
  io.out << (all ? "all metrics pass" : "some metrics FAIL") << "\nwrote " << path.string() << '\n';
  return all ? kExitOk : kExitFailure;
}

/// Basis, coefficient and series-route diagnostics for one torsion.
inline json basis_diagnostics(double tau, const SeriesControl& control) {
  json doc;
  doc["tau"] = tau;
  json roots = json::array();
  for (const auto& r : indicial_roots(tau)) roots.push_back({r.real(), r.imag()});
  doc["indicial_roots"] = roots;

  json basis = json::array();
  for (int l = 1; l <= 3; ++l) {
    const BasisFunction b = basis_S(l, tau);
    json num = json::array(), den = json::array();
    for (const auto& a : b.f32_spec.numerator_params) num.push_back({a.real(), a.imag()});
    for (const auto& a : b.f32_spec.denominator_params) den.push_back({a.real(), a.imag()});
    // Coefficients from the closed-form displays vs the series of S_l / tau.
    const auto f = hypergeometric_coefficients(b.f32_spec, 8);
    double d_dev = 0.0;
    for (int n = 0; n < 8; ++n) {
      const Complex expect = b.prefactor * f[static_cast<std::size_t>(n)] / tau;
      d_dev = std::fmax(d_dev, std::abs(std::exp(log_d_coefficient(l, tau, n)) - expect) / std::abs(expect));
    }
    basis.push_back({{"index", l},
                     {"exponent_rho", {b.exponent_rho.real(), b.exponent_rho.imag()}},
                     {"prefactor", {b.prefactor.real(), b.prefactor.imag()}},
                     {"numerator_params", num},
                     {"denominator_params", den},
                     {"d_coefficient_rel_deviation", d_dev}});
  }
  doc["basis"] = basis;

  const CoefficientMatrix cm = solve_coefficients(tau, control);
  json c = json::array();
  for (const auto& row : cm.c) {
    json r = json::array();
    for (const auto& z : row) r.push_back({z.real(), z.imag()});
    c.push_back(r);
  }
  doc["coefficients"] = {{"c", c}, {"condition", cm.condition}};

  // How far the e coefficients as printed are from the ones the integral produces.
  double e_dev = 0.0;
  for (int l = 2; l <= 3; ++l)
    for (int n = 0; n < 4; ++n)
      for (int m = 0; m < 4; ++m) {
        const Complex good = std::exp(log_e_coefficient(l, tau, n, m, EForm::corrected));
        const Complex printed = std::exp(log_e_coefficient(l, tau, n, m, EForm::printed));
        e_dev = std::fmax(e_dev, std::abs(printed - good) / std::abs(good));
      }
  doc["printed_e_coefficients"] = {{"max_rel_deviation", e_dev}, {"matches", e_dev <= 1e-10}};

  json paths = json::array();
  for (double t : {0.25, 0.5, 0.75})
    for (int l = 1; l <= 3; ++l) {
      const auto a = compare_U_paths(l, tau, t, control, SeriesPath::double_sum, SeriesPath::combined_4F3);
      const auto b = compare_U_paths(l, tau, t, control, SeriesPath::termwise_integration, SeriesPath::combined_4F3);
      paths.push_back({{"index", l},
                       {"t", t},
                       {"double_sum_vs_combined", a.difference},
                       {"termwise_vs_combined", b.difference},
                       {"budget", a.budget}});
    }
  doc["u_paths"] = paths;
  return doc;
}

inline int cmd_basis_dump(const RunConfig& cfg, Streams io) {
  validate_tau(cfg.tau);
  if (cfg.format_given && cfg.format == Format::csv)
    throw Error(ErrorCode::config, "basis-dump writes JSON only");
  cfg.control().validate();
  const json doc = basis_diagnostics(cfg.tau, cfg.control());
  const auto path = output_path(cfg, "basis_" + tau_tag(cfg.tau) + ".json");
  write_file_atomic(path, dump(doc));
  io.out << "condition " << format_double(doc["coefficients"]["condition"].get<double>()) << ", printed e "
         << (doc["printed_e_coefficients"]["matches"].get<bool>() ? "matches" : "does not match")
         << " (max rel deviation " << format_double(doc["printed_e_coefficients"]["max_rel_deviation"].get<double>())
         << ")\nwrote " << path.string() << '\n';
  return kExitOk;
}

/// One data file per torsion into the output directory.
inline int cmd_export(const RunConfig& cfg, Streams io) {
  validate_window(cfg);
  const std::vector<double> taus = cfg.taus.empty() ? std::vector<double>{0.1, 0.5, 1.0, 2.0} : cfg.taus;
  for (double tau : taus) validate_tau(tau);
  const char* env = std::getenv("CTCURVE_OUTPUT_DIR");
  const std::filesystem::path dir = !cfg.output_path.empty() ? cfg.output_path : (env && *env ? env : ".");

  std::vector<std::future<std::vector<FigureCurve>>> jobs;
  for (double tau : taus)
    jobs.push_back(std::async(std::launch::async, [&cfg, tau] {
      return figure_reproduction({tau}, {cfg.t_min, cfg.t_max}, cfg.samples, cfg.control(), cfg.ode_tol,
                                 cfg.comparison());
    }));
  bool all = true;
  for (auto& job : jobs) {
    const FigureCurve fc = job.get().front();
    const auto path = dir / ("figure_" + tau_tag(fc.curve.params.tau) + "." + extension(cfg.format));
    write_file_atomic(path, cfg.format == Format::csv ? curve_csv(fc.curve) : dump(curve_document(fc.curve, fc.report)));
    print_report(io.out, fc.report);
    io.out << "wrote " << path.string() << '\n';
    all = all && fc.report.pass();
  }
  return all ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------------

inline void add_common(CLI::App* sub, RunConfig& cfg, bool multi_tau) {
  if (multi_tau)
    sub->add_option("--taus", cfg.taus, "Torsion values")->delimiter(',');
  else
    sub->add_option("--tau", cfg.tau, "Torsion")->capture_default_str();
  sub->add_option("--t-min", cfg.t_min, "Lower end of the t window")->capture_default_str();
  sub->add_option("--t-max", cfg.t_max, "Upper end of the t window")->capture_default_str();
  sub->add_option("--samples", cfg.samples, "Number of uniform t samples")->capture_default_str();
  sub->add_option("-o,--output", cfg.output_path, "Output file (export: directory)");
  sub->add_option("--tol-distance", cfg.tol_distance, "Pointwise distance tolerance");
  sub->add_option("--ode-tol", cfg.ode_tol, "Integrator tolerance")->capture_default_str();
  sub->add_option("--max-terms", cfg.max_terms, "Series term limit")->capture_default_str();
  sub->add_option("--tail-tol", cfg.tail_tol, "Series tail tolerance")->capture_default_str();
  sub->add_option_function<std::string>(
         "--format",
         [&cfg](const std::string& f) {
           cfg.format = f == "json" ? Format::json : Format::csv;
           cfg.format_given = true;
         },
         "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
}

inline int run(int argc, const char* const* argv, Streams io) {
  RunConfig cfg;
  CLI::App app{"Spherical curves of constant torsion: closed form, Frenet oracle and cross-validation", "ctcurve"};
  app.set_config("--config", "", "TOML/INI file with option defaults");
  app.require_subcommand(1);

  auto* sample = app.add_subcommand("sample", "Sample one curve");
  add_common(sample, cfg, false);
  std::string source = "closed-form";
  sample->add_option("--source", source, "closed-form, oracle or both")
      ->check(CLI::IsMember({"closed-form", "oracle", "both"}))
      ->capture_default_str();
  auto* compare = app.add_subcommand("compare", "Closed form vs oracle report for one torsion");
  add_common(compare, cfg, false);
  auto* validate = app.add_subcommand("validate", "Run the validation suites over a set of torsions");
  add_common(validate, cfg, true);
  auto* basis = app.add_subcommand("basis-dump", "Basis, coefficient and series diagnostics");
  add_common(basis, cfg, false);
  auto* exp = app.add_subcommand("export", "Figure data files, one per torsion");
  add_common(exp, cfg, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    io.out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    io.out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    io.out << "ctcurve 0.1.0\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    return report_error(io.err, "config", e.what());
  }
  cfg.source = source == "oracle" ? Source::oracle : source == "both" ? Source::both : Source::closed_form;

  try {
    if (sample->parsed()) return cmd_sample(cfg, io);
    if (compare->parsed()) return cmd_compare(cfg, io);
    if (validate->parsed()) return cmd_validate(cfg, io);
    if (basis->parsed()) return cmd_basis_dump(cfg, io);
    if (exp->parsed()) return cmd_export(cfg, io);
  } catch (const Error& e) {
    // Bad numbers from the user surface as domain errors inside the library.
    const bool user_input = e.code() == ErrorCode::config || e.code() == ErrorCode::unsupported_t0;
    return report_error(io.err, user_input ? "config" : to_string(e.code()), e.what(), e.at_t());
  } catch (const std::exception& e) {
    return report_error(io.err, "internal", e.what());
  }
  return report_error(io.err, "config", "no command given");
}

}  // namespace ctcurve::cli
