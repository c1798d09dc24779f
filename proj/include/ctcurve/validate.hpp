#pragma once

// Cross-validation of the closed form against the Frenet oracle and against
// the tangent ODE itself.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ctcurve/closedform.hpp"
#include "ctcurve/error.hpp"
#include "ctcurve/frenet.hpp"
#include "ctcurve/oracle.hpp"
#include "ctcurve/specfun.hpp"

namespace ctcurve {

struct Metric {
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct ValidationReport {
  std::string case_id;
  double tau = 0.0;
  std::pair<double, double> t_window{0.0, 0.0};
  std::map<std::string, Metric> metrics;
  double worst_t = 0.0;
  std::optional<Truncation> truncation;

  /// NaN never passes.
  void add(const std::string& name, double value, double tolerance) {
    metrics[name] = {value, tolerance, value <= tolerance};
  }

  bool pass() const {
    return std::all_of(metrics.begin(), metrics.end(), [](const auto& kv) { return kv.second.pass; });
  }
};

inline std::string format_tau(double tau) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", tau);
  return buf;
}

// ---------------------------------------------------------------------------
// Frenet apparatus from finite differences in arc length.

/// Derivatives 1..3 of a curve at s from a 7-point central stencil (O(h^4)
/// for all three).
template <class Curve>
std::array<Vec3, 3> central_derivatives(Curve&& gamma_of_s, double s, double h) {
  std::array<Vec3, 7> p;
  for (int k = -3; k <= 3; ++k) p[static_cast<std::size_t>(k + 3)] = gamma_of_s(s + k * h);
  const auto at = [&](int k) { return p[static_cast<std::size_t>(k + 3)]; };
  const Vec3 d1 = (-1.0 * at(-3) + 9.0 * at(-2) - 45.0 * at(-1) + 45.0 * at(1) - 9.0 * at(2) + at(3)) / (60.0 * h);
  const Vec3 d2 = (2.0 * at(-3) - 27.0 * at(-2) + 270.0 * at(-1) - 490.0 * at(0) + 270.0 * at(1) - 27.0 * at(2) +
                   2.0 * at(3)) /
                  (180.0 * h * h);
  const Vec3 d3 = (at(-3) - 8.0 * at(-2) + 13.0 * at(-1) - 13.0 * at(1) + 8.0 * at(2) - at(3)) / (8.0 * h * h * h);
  return {d1, d2, d3};
}

/// Stencil spacing in s at parameter t: a fixed fraction of the local length
/// scale, pulled in so the stencil stays on the increasing branch.
inline double stencil_step(const CurveParams& params, double t) {
  const double s = s_of_t(params, t);
  const double s_max = (0.5 * std::numbers::pi - params.phase_C) / params.tau;
  const double s_min = -params.phase_C / params.tau;
  double h = 0.02 * std::min(t, 1.0 / params.tau);
  h = std::min(h, 0.9 * (s_max - s) / 3.0);
  h = std::min(h, 0.9 * (s - s_min) / 3.0);
  return h;
}

/// Speed, curvature and torsion at t, estimated from curve points alone.
template <class PointAtT>
Apparatus estimate_apparatus(const CurveParams& params, PointAtT&& point_at_t, double t) {
  const double h = stencil_step(params, t);
  const auto gamma_of_s = [&](double s) { return point_at_t(t_of_s(params, s)); };
  const auto d = central_derivatives(gamma_of_s, s_of_t(params, t), h);
  return frenet_apparatus(d[0], d[1], d[2]);
}

// ---------------------------------------------------------------------------

struct ComparisonOptions {
  double distance_tol = 1e-6;
  double sphere_closed_form_tol = 1e-6;
  double sphere_oracle_tol = 1e-8;
  double frame_drift_tol = 1e-8;
  double tangent_tol = 1e-6;
  double tangent_derivative_tol = 1e-5;
  double tau_rel_tol = 1e-4;
  double kappa_t_tol = 1e-4;
  int fd_edge_drop = 2;              // samples skipped at each end for the stencil metrics
  std::optional<double> oracle_tau;  // integrate the oracle with a different torsion
};

/// Closed form vs oracle on a uniform t-grid over `t_window`, both started from
/// the same point and frame at t0 = 1/2. `tol` is the integrator tolerance.
inline ValidationReport run_comparison(double tau, std::pair<double, double> t_window, int n_samples,
                                       const SeriesControl& control, double tol,
                                       const ComparisonOptions& options = {}) {
  const auto [lo, hi] = t_window;
  if (!(lo > 0.0 && hi < 1.0 && lo <= hi)) throw Error(ErrorCode::domain, "run_comparison: window must lie in (0, 1)");
  if (n_samples < 1) throw Error(ErrorCode::config, "run_comparison: need at least one sample");

  ValidationReport rep;
  rep.case_id = "compare/tau=" + format_tau(tau);
  rep.tau = tau;
  rep.t_window = t_window;
  rep.worst_t = lo;

  const ClosedFormCurve cf(tau, control);
  const CurveParams cf_params{tau, 0.0, ClosedFormCurve::kT0};
  const CurveParams ode_params{options.oracle_tau.value_or(tau), 0.0, ClosedFormCurve::kT0};
  const FrenetOracle oracle(ode_params, cf.initial_state(), lo, hi, tol);
  rep.truncation = oracle.truncation();

  const std::vector<double> ts = uniform_grid(lo, hi, lo == hi ? 1 : n_samples);
  double dist = 0.0, sph_cf = 0.0, sph_ode = 0.0, drift = 0.0, tan = 0.0, dtan = 0.0;
  for (double t : ts) {
    const Vec3 p = cf.point(t);
    sph_cf = std::fmax(sph_cf, std::fabs(norm(p) - 1.0));
    if (!oracle.covers(t)) continue;
    const FrenetState st = oracle.state_at(t);
    const double d = distance(p, st.point);
    if (d > dist || (dist == 0.0 && t == ts.front())) {
      dist = d;
      rep.worst_t = t;
    }
    sph_ode = std::fmax(sph_ode, std::fabs(norm(st.point) - 1.0));
    drift = std::fmax(drift, st.frame().orthonormality_defect());
    const TangentJet tj = cf.tangent_jet(t);
    if (tj.max_imag > kRealnessTolerance)
      throw Error(ErrorCode::numeric_inconsistency, "run_comparison: tangent is not real", t);
    tan = std::fmax(tan, max_abs_component(tj.d[0] - st.T));
    const double v = speed_of_t(cf_params, t);
    dtan = std::fmax(dtan, max_abs_component(tj.d[1] - (v / t) * st.N));
  }
  rep.add("distance", dist, options.distance_tol);
  rep.add("sphere_closed_form", sph_cf, options.sphere_closed_form_tol);
  rep.add("sphere_oracle", sph_ode, options.sphere_oracle_tol);
  rep.add("frame_drift_oracle", drift, options.frame_drift_tol);
  rep.add("tangent", tan, options.tangent_tol);
  rep.add("tangent_derivative", dtan, options.tangent_derivative_tol);

  // Torsion and curvature from finite differences of the closed-form points.
  double tau_err = 0.0, kt_err = 0.0;
  const auto point_at = [&](double t) { return cf.point(t); };
  const int drop = options.fd_edge_drop;
  for (int i = drop; i + drop < static_cast<int>(ts.size()); ++i) {
    const double t = ts[static_cast<std::size_t>(i)];
    const Apparatus a = estimate_apparatus(cf_params, point_at, t);
    tau_err = std::fmax(tau_err, std::fabs(a.tau - tau) / tau);
    kt_err = std::fmax(kt_err, std::fabs(a.kappa * t - 1.0));
  }
  rep.add("tau_rel", tau_err, options.tau_rel_tol);
  rep.add("kappa_t", kt_err, options.kappa_t_tol);
  return rep;
}

// ---------------------------------------------------------------------------

struct ResidualOptions {
  double threshold = 1e-8;
  double exponent_perturbation = 0.0;  // added to every basis exponent (negative control)
};

/// Normalized residual of the tangent ODE for S1..S3 and for the assembled
/// tangent components, all with term-wise analytic derivatives.
inline ValidationReport ode_residual_sweep(double tau, const std::vector<double>& points, const SeriesControl& control,
                                           const ResidualOptions& options = {}) {
  for (double t : points)
    if (!(t > 0.0 && t < 1.0)) throw Error(ErrorCode::domain, "ode_residual_sweep: points must lie in (0, 1)", t);
  const TangentOde ode(tau);
  ValidationReport rep;
  rep.case_id = "residual/tau=" + format_tau(tau);
  rep.tau = tau;
  if (!points.empty()) {
    const auto [mn, mx] = std::minmax_element(points.begin(), points.end());
    rep.t_window = {*mn, *mx};
    rep.worst_t = *mn;
  }

  std::array<BasisFunction, 3> basis;
  for (int l = 0; l < 3; ++l) {
    basis[static_cast<std::size_t>(l)] = basis_S(l + 1, tau);
    basis[static_cast<std::size_t>(l)].exponent_rho += options.exponent_perturbation;
  }
  const CoefficientMatrix coeffs = solve_coefficients(tau, control);

  std::array<double, 3> worst{};
  double worst_tangent = 0.0, overall = -1.0;
  for (double t : points) {
    std::array<BasisJet, 3> jets;
    for (std::size_t l = 0; l < 3; ++l) {
      jets[l] = eval_basis(basis[l], t, control);
      const double r = ode.residual(t, jets[l].as_array()).normalized();
      worst[l] = std::fmax(worst[l], r);
      if (r > overall) {
        overall = r;
        rep.worst_t = t;
      }
    }
    const TangentJet tj = tangent_jet(jets, coeffs);
    for (std::size_t j = 0; j < 3; ++j) {
      const std::array<Complex, 4> comp = {tj.d[0][j], tj.d[1][j], tj.d[2][j], tj.d[3][j]};
      worst_tangent = std::fmax(worst_tangent, ode.residual(t, comp).normalized());
    }
  }
  for (std::size_t l = 0; l < 3; ++l) rep.add("residual_S" + std::to_string(l + 1), worst[l], options.threshold);
  rep.add("residual_tangent", worst_tangent, options.threshold);
  return rep;
}

// ---------------------------------------------------------------------------

struct FigureCurve {
  SampledCurve curve;
  ValidationReport report;
};

/// Closed-form sampled curves for each torsion, each with its oracle comparison.
inline std::vector<FigureCurve> figure_reproduction(const std::vector<double>& taus, std::pair<double, double> t_window,
                                                    int n_samples, const SeriesControl& control = {},
                                                    double tol = 1e-10, const ComparisonOptions& options = {}) {
  std::vector<FigureCurve> out;
  out.reserve(taus.size());
  for (double tau : taus) {
    if (!(tau > 0.0)) throw Error(ErrorCode::domain, "figure_reproduction: torsions must be positive");
    const ClosedFormCurve cf(tau, control);
    const std::vector<double> ts = uniform_grid(t_window.first, t_window.second, n_samples);
    FigureCurve fc{cf.sample(ts), run_comparison(tau, t_window, n_samples, control, tol, options)};
    fc.report.case_id = "figure/tau=" + format_tau(tau);
    fc.curve.truncation = fc.report.truncation;
    out.push_back(std::move(fc));
  }
  return out;
}

}  // namespace ctcurve
