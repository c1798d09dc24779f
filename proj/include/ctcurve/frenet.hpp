#pragma once

// Classical curve machinery for the constant-torsion family on the unit
// sphere, written in the radius-of-curvature parameter t = 1/kappa.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "ctcurve/error.hpp"
#include "ctcurve/vec3.hpp"

namespace ctcurve {

/// Identity card of one curve of the family: torsion, the phase constant C in
/// kappa(s) = csc(tau s + C), and the base parameter t0 of the initial data.
struct CurveParams {
  double tau = 1.0;
  double phase_C = 0.0;
  double t0 = 0.5;

  void validate() const {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw Error(ErrorCode::domain, "CurveParams: tau must be > 0");
    if (!(t0 > 0.0 && t0 < 1.0)) throw Error(ErrorCode::domain, "CurveParams: t0 must lie in (0, 1)");
    if (!std::isfinite(phase_C)) throw Error(ErrorCode::domain, "CurveParams: phase_C must be finite");
  }
};

struct Frame {
  Vec3 T{1.0, 0.0, 0.0};
  Vec3 N{0.0, 1.0, 0.0};
  Vec3 B{0.0, 0.0, 1.0};

  /// Largest deviation of the Gram matrix from the identity.
  double orthonormality_defect() const {
    double d = 0.0;
    d = std::fmax(d, std::fabs(dot(T, T) - 1.0));
    d = std::fmax(d, std::fabs(dot(N, N) - 1.0));
    d = std::fmax(d, std::fabs(dot(B, B) - 1.0));
    d = std::fmax(d, std::fabs(dot(T, N)));
    d = std::fmax(d, std::fabs(dot(T, B)));
    d = std::fmax(d, std::fabs(dot(N, B)));
    return d;
  }

  /// Gram-Schmidt on (T, N), B = T x N. For reporting only.
  Frame reorthonormalized() const {
    Frame f;
    f.T = normalized(T);
    f.N = normalized(N - dot(N, f.T) * f.T);
    f.B = cross(f.T, f.N);
    return f;
  }
};

/// Point plus frame; also used for the state derivative.
struct FrenetState {
  Vec3 point{};
  Vec3 T{1.0, 0.0, 0.0};
  Vec3 N{0.0, 1.0, 0.0};
  Vec3 B{0.0, 0.0, 1.0};

  Frame frame() const { return {T, N, B}; }

  /// Orthonormal within 1e-8 and B = T x N within 1e-8.
  bool is_valid(double tol = 1e-8) const {
    const Frame f = frame();
    if (f.orthonormality_defect() > tol) return false;
    return max_abs_component(cross(T, N) - B) <= tol;
  }
};

struct Apparatus {
  double v = 0.0;
  double kappa = 0.0;
  double tau = 0.0;
};

/// Speed, curvature and torsion from the first three derivatives of any
/// regular parametrization.
inline Apparatus frenet_apparatus(const Vec3& d1, const Vec3& d2, const Vec3& d3) {
  const double v = norm(d1);
  if (!(v > 0.0)) throw Error(ErrorCode::degenerate_curve, "frenet_apparatus: zero speed");
  const Vec3 c = cross(d1, d2);
  const double cn = norm(c);
  if (!(cn > 1e-14 * v * norm(d2)) || cn == 0.0)
    throw Error(ErrorCode::degenerate_curve, "frenet_apparatus: zero curvature");
  return {v, cn / (v * v * v), dot(c, d3) / (cn * cn)};
}

/// kappa(s) = csc(tau s + C) on -C/tau < s < (pi - C)/tau.
inline double kappa_of_s(const CurveParams& params, double s) {
  const double lo = -params.phase_C / params.tau;
  const double hi = (std::numbers::pi - params.phase_C) / params.tau;
  if (!(s > lo && s < hi)) throw Error(ErrorCode::domain, "kappa_of_s: s outside the curvature interval", s);
  return 1.0 / std::sin(params.tau * s + params.phase_C);
}

/// Radius of curvature t = sin(tau s + C) on the increasing branch.
inline double t_of_s(const CurveParams& params, double s) {
  const double lo = -params.phase_C / params.tau;
  const double hi = (0.5 * std::numbers::pi - params.phase_C) / params.tau;
  if (!(s > lo && s < hi)) throw Error(ErrorCode::domain, "t_of_s: s outside the increasing branch", s);
  return std::sin(params.tau * s + params.phase_C);
}

inline double s_of_t(const CurveParams& params, double t) {
  if (!(t > 0.0 && t < 1.0)) throw Error(ErrorCode::domain, "s_of_t: t must lie in (0, 1)", t);
  return (std::asin(t) - params.phase_C) / params.tau;
}

/// |d gamma / dt| = 1/(tau sqrt(1 - t^2)).
inline double speed_of_t(const CurveParams& params, double t) {
  if (!(t >= 0.0 && t < 1.0)) throw Error(ErrorCode::domain, "speed_of_t: t must lie in [0, 1)", t);
  return 1.0 / (params.tau * std::sqrt(1.0 - t * t));
}

/// Right-hand side of the 12-dimensional (gamma, T, N, B) system in t.
inline FrenetState ode_rhs(const CurveParams& params, double t, const FrenetState& state) {
  if (!(t > 0.0 && t < 1.0)) throw Error(ErrorCode::domain, "ode_rhs: t must lie in (0, 1)", t);
  const double v = speed_of_t(params, t);
  const double vk = v / t;
  const double vt = v * params.tau;
  FrenetState d;
  d.point = v * state.T;
  d.T = vk * state.N;
  d.N = -vk * state.T + vt * state.B;
  d.B = -vt * state.N;
  return d;
}

/// Left side minus right side of kappa^2 tau^2 (kappa^2 r^2 - 1) = kappa'^2 v^2.
inline double sphere_condition_residual(double kappa, double kappa_prime, double tau, double v, double r) {
  return kappa * kappa * tau * tau * (kappa * kappa * r * r - 1.0) - kappa_prime * kappa_prime * v * v;
}

enum class CurveSource { closed_form, ode_oracle };

inline const char* to_string(CurveSource s) {
  return s == CurveSource::closed_form ? "closed_form" : "ode_oracle";
}

struct CurveSample {
  double t = 0.0;
  double s = 0.0;
  Vec3 point{};
  std::optional<Frame> frame;
};

/// Set when the integrator could not cover the requested window.
struct Truncation {
  double requested_lo = 0.0;
  double requested_hi = 0.0;
  double achieved_lo = 0.0;
  double achieved_hi = 0.0;
  std::string reason;
};

struct SampledCurve {
  CurveParams params;
  std::vector<CurveSample> samples;
  CurveSource source = CurveSource::closed_form;
  std::optional<Truncation> truncation;

  /// Largest |chord - delta s| / delta s between consecutive samples.
  double chord_defect() const {
    double worst = 0.0;
    for (std::size_t i = 1; i < samples.size(); ++i) {
      const double ds = samples[i].s - samples[i - 1].s;
      const double chord = distance(samples[i].point, samples[i - 1].point);
      worst = std::fmax(worst, std::fabs(chord - ds) / ds);
    }
    return worst;
  }

  double max_radius() const {
    double r = 0.0;
    for (const auto& smp : samples) r = std::fmax(r, norm(smp.point));
    return r;
  }
};

/// Scale by lambda: points and arc lengths by lambda, torsion by 1/lambda.
inline SampledCurve homothety(const SampledCurve& curve, double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw Error(ErrorCode::domain, "homothety: lambda must be > 0");
  SampledCurve out = curve;
  out.params.tau = curve.params.tau / lambda;
  for (auto& smp : out.samples) {
    smp.point *= lambda;
    smp.s *= lambda;
  }
  return out;
}

/// t-grid with n points spanning [lo, hi]; a single point when lo == hi.
inline std::vector<double> uniform_grid(double lo, double hi, int n) {
  if (n < 1) throw Error(ErrorCode::config, "uniform_grid: need at least one sample");
  if (lo == hi || n == 1) return {lo};
  std::vector<double> ts(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) ts[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  ts.back() = hi;
  return ts;
}

}  // namespace ctcurve
