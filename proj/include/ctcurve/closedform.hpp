#pragma once

// Explicit hypergeometric solution for the spherical curves of constant
// torsion.
//
// In the radius-of-curvature parameter t (kappa = 1/t, speed 1/(tau sqrt(1-t^2)))
// every component of the unit tangent solves
//
//   t^3 (t^2-1) tau^2 T''' + t^2 (5t^2-2) tau^2 T'' + t (3 t^2 tau^2 - 1) T' + T = 0,
//
// which has a regular singular point at t = 0 with exponents {1, -i/tau, +i/tau}.
// The three Frobenius solutions are
//
//   S1 = i t 3F2(1/2, 1/2, 3/2; 3/2 - i/(2tau), 3/2 + i/(2tau); t^2)
//   S2 = (-1)^(-i/(2tau)) t^(-i/tau) 3F2(1+a, a, a; 1/2+a, 1+2a; t^2),  a = -i/(2tau)
//   S3 = the same with a = +i/(2tau)
//
// with (-1)^w taken on the principal branch, so (-1)^(-+i/(2tau)) = e^(+-pi/(2tau)).
// The curve itself is gamma = sum_l c_{jl} U_l with U_l = integral of S_l v dt,
// available through three independent series routes (see SeriesPath).

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "ctcurve/error.hpp"
#include "ctcurve/frenet.hpp"
#include "ctcurve/specfun.hpp"
#include "ctcurve/vec3.hpp"

namespace ctcurve {

/// The tangent ODE as a sum of monomial-coefficient terms coef * t^power * D^order.
class TangentOde {
 public:
  struct Term {
    int order;
    int power;
    double coef;
  };

  explicit TangentOde(double tau) : tau_(tau) {
    if (!(tau > 0.0)) throw Error(ErrorCode::domain, "TangentOde: tau must be > 0");
  }

  double tau() const noexcept { return tau_; }

  std::array<Term, 7> terms() const {
    const double s = tau_ * tau_;
    return {{{3, 5, s}, {3, 3, -s}, {2, 4, 5.0 * s}, {2, 2, -2.0 * s}, {1, 3, 3.0 * s}, {1, 1, -1.0}, {0, 0, 1.0}}};
  }

  /// Applying the operator to t^r gives lower(r) t^r + upper(r) t^(r+2).
  Complex lower(Complex r) const { return shifted(r, 0); }
  Complex upper(Complex r) const { return shifted(r, 2); }

  struct Residual {
    Complex value;
    double scale = 0.0;  // largest |term| entering the sum
    double normalized() const { return scale == 0.0 ? 0.0 : std::abs(value) / scale; }
  };

  /// jet = (f, f', f'', f''') at t.
  Residual residual(double t, const std::array<Complex, 4>& jet) const {
    const double s = tau_ * tau_;
    const double t2 = t * t;
    const std::array<Complex, 4> parts = {
        jet[0], t * (3.0 * t2 * s - 1.0) * jet[1], t2 * (5.0 * t2 - 2.0) * s * jet[2],
        t2 * t * (t2 - 1.0) * s * jet[3]};
    Residual r{0.0, 0.0};
    for (const auto& p : parts) {
      r.value += p;
      r.scale = std::fmax(r.scale, std::abs(p));
    }
    return r;
  }

 private:
  static Complex falling(Complex r, int k) {
    Complex out = 1.0;
    for (int i = 0; i < k; ++i) out *= r - static_cast<double>(i);
    return out;
  }

  Complex shifted(Complex r, int shift) const {
    Complex sum = 0.0;
    for (const auto& term : terms())
      if (term.power - term.order == shift) sum += term.coef * falling(r, term.order);
    return sum;
  }

  double tau_;
};

/// Leading exponents at t = 0 in basis order: {1, -i/tau, +i/tau}.
inline std::array<Complex, 3> indicial_roots(double tau) {
  if (!(tau > 0.0)) throw Error(ErrorCode::domain, "indicial_roots: tau must be > 0");
  return {Complex(1.0, 0.0), Complex(0.0, -1.0 / tau), Complex(0.0, 1.0 / tau)};
}

/// Derivatives 0..3 of a scalar function of t.
struct BasisJet {
  Complex value{};
  Complex d1{};
  Complex d2{};
  Complex d3{};
  int terms = 0;

  std::array<Complex, 4> as_array() const { return {value, d1, d2, d3}; }
};

/// t^rho sum_k a_k t^(2k), coefficients from the ODE recurrence, a_0 = 1.
struct FrobeniusSeries {
  double tau = 1.0;
  Complex exponent_rho{};
  std::vector<Complex> coefficients;

  BasisJet eval(double t) const {
    BasisJet j;
    Complex tw = std::exp(exponent_rho * std::log(t));
    for (std::size_t k = 0; k < coefficients.size(); ++k) {
      const Complex w = exponent_rho + 2.0 * static_cast<double>(k);
      const Complex base = coefficients[k] * tw;
      j.value += base;
      j.d1 += base * w / t;
      j.d2 += base * w * (w - 1.0) / (t * t);
      j.d3 += base * w * (w - 1.0) * (w - 2.0) / (t * t * t);
      tw *= t * t;
    }
    j.terms = static_cast<int>(coefficients.size());
    return j;
  }
};

inline FrobeniusSeries frobenius_series(double tau, Complex rho, int n_terms) {
  if (n_terms < 1 || n_terms > 500) throw Error(ErrorCode::config, "frobenius_series: n_terms must be in [1, 500]");
  const TangentOde ode(tau);
  const double root_scale = 1.0 + std::abs(rho) * std::abs(rho) * std::abs(rho) * tau * tau;
  if (std::abs(ode.lower(rho)) > 1e-12 * root_scale)
    throw Error(ErrorCode::domain, "frobenius_series: rho is not an indicial root");
  FrobeniusSeries fs{tau, rho, {}};
  fs.coefficients.reserve(static_cast<std::size_t>(n_terms));
  fs.coefficients.push_back(1.0);
  for (int k = 1; k < n_terms; ++k) {
    const Complex r = rho + 2.0 * static_cast<double>(k);
    const Complex lead = ode.lower(r);
    if (std::abs(lead) == 0.0)
      throw Error(ErrorCode::recurrence_breakdown, "frobenius_series: leading recurrence factor vanished");
    fs.coefficients.push_back(-ode.upper(r - 2.0) * fs.coefficients.back() / lead);
  }
  return fs;
}

/// One of S1, S2, S3: prefactor * t^rho * 3F2(...; t^2).
struct BasisFunction {
  int index = 1;
  Complex exponent_rho{};
  HypergeometricSpec f32_spec;  // argument is filled in with t^2 at evaluation
  Complex prefactor{};
};

inline BasisFunction basis_S(int index, double tau) {
  if (!(tau > 0.0)) throw Error(ErrorCode::domain, "basis_S: tau must be > 0");
  const double y = 1.0 / (2.0 * tau);
  BasisFunction b;
  b.index = index;
  switch (index) {
    case 1:
      b.exponent_rho = 1.0;
      b.prefactor = kI;
      b.f32_spec.numerator_params = {0.5, 0.5, 1.5};
      b.f32_spec.denominator_params = {Complex(1.5, -y), Complex(1.5, y)};
      break;
    case 2:
    case 3: {
      const Complex a(0.0, index == 2 ? -y : y);
      b.exponent_rho = 2.0 * a;
      b.prefactor = std::exp(a * Complex(0.0, std::numbers::pi));  // principal (-1)^a
      b.f32_spec.numerator_params = {1.0 + a, a, a};
      b.f32_spec.denominator_params = {0.5 + a, 1.0 + 2.0 * a};
      break;
    }
    default:
      throw Error(ErrorCode::domain, "basis_S: index must be 1, 2 or 3");
  }
  return b;
}

/// The coefficients f_0..f_{count-1} of a hypergeometric series (argument ignored).
inline std::vector<Complex> hypergeometric_coefficients(const HypergeometricSpec& spec, int count) {
  std::vector<Complex> c(static_cast<std::size_t>(std::max(count, 0)));
  if (c.empty()) return c;
  c[0] = 1.0;
  for (int n = 0; n + 1 < count; ++n) {
    Complex r = 1.0 / static_cast<double>(n + 1);
    for (const auto& a : spec.numerator_params) r *= a + static_cast<double>(n);
    for (const auto& b : spec.denominator_params) r /= b + static_cast<double>(n);
    c[static_cast<std::size_t>(n + 1)] = c[static_cast<std::size_t>(n)] * r;
  }
  return c;
}

namespace detail {

/// Re-runs once with doubled max_terms when convergence fails near t = 1.
template <class F>
auto with_endpoint_retry(double t, const SeriesControl& control, F&& f) {
  try {
    return f(control);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::non_convergence || !(t > 0.9)) throw;
  }
  return f(control.doubled());
}

// Stop rules inside this module are relative: the basis functions and their
// integrals span many orders of magnitude once tau is small.
inline double relative_magnitude(Complex term, Complex partial) {
  const double p = std::abs(partial);
  return p == 0.0 ? std::abs(term) : std::abs(term) / p;
}

inline BasisJet sum_basis_jet(const BasisFunction& b, double t, const SeriesControl& control) {
  const Complex rho = b.exponent_rho;
  const double t2 = t * t;
  Complex tw = std::exp(rho * std::log(t));
  Complex coef = 1.0;
  std::array<Complex, 4> sum{};
  TailMonitor monitor(control);
  for (int n = 0;; ++n) {
    if (monitor.count() >= control.max_terms)
      throw Error(ErrorCode::non_convergence,
                  "eval_basis: S" + std::to_string(b.index) + " did not converge in " +
                      std::to_string(control.max_terms) + " terms",
                  t);
    const Complex w = rho + 2.0 * static_cast<double>(n);
    const Complex base = coef * tw;
    const std::array<Complex, 4> term = {base, base * w / t, base * w * (w - 1.0) / t2,
                                         base * w * (w - 1.0) * (w - 2.0) / (t2 * t)};
    double mag = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
      sum[k] += term[k];
      mag = std::fmax(mag, relative_magnitude(term[k], sum[k]));
    }
    if (monitor.observe(mag)) break;
    Complex ratio = 1.0 / static_cast<double>(n + 1);
    for (const auto& a : b.f32_spec.numerator_params) ratio *= a + static_cast<double>(n);
    for (const auto& d : b.f32_spec.denominator_params) ratio /= d + static_cast<double>(n);
    coef *= ratio;
    tw *= t2;
  }
  return {b.prefactor * sum[0], b.prefactor * sum[1], b.prefactor * sum[2], b.prefactor * sum[3],
          monitor.count()};
}

}  // namespace detail

/// Value and first three t-derivatives, differentiated term by term.
inline BasisJet eval_basis(const BasisFunction& basis, double t, const SeriesControl& control) {
  if (!(t > 0.0 && t < 1.0)) throw Error(ErrorCode::domain, "eval_basis: t must lie in (0, 1)", t);
  control.validate();
  return detail::with_endpoint_retry(t, control, [&](const SeriesControl& c) {
    return detail::sum_basis_jet(basis, t, c);
  });
}

/// T, T', T'' at t0.
struct InitialTangent {
  Vec3 T0;
  Vec3 T0p;
  Vec3 T0pp;
};

/// Tangent jet at t0 implied by a Frenet frame through the Frenet equations:
/// T' = (v/t) N and T'' = ((v' t - v)/t^2) N - (v/t)^2 T + (v^2 tau / t) B.
inline InitialTangent tangent_jet_from_frame(double tau, double t0, const Frame& f) {
  const double w = 1.0 - t0 * t0;
  const double v = 1.0 / (tau * std::sqrt(w));
  const double vp = t0 / (tau * w * std::sqrt(w));
  return {f.T, (v / t0) * f.N,
          ((vp * t0 - v) / (t0 * t0)) * f.N - (v * v / (t0 * t0)) * f.T + (v * v * tau / t0) * f.B};
}

/// Initial data at t0 = 1/2 with T0 = (1,0,0), N0 = (0,1,0).
inline InitialTangent initial_conditions(double tau, double t0) {
  if (!(tau > 0.0)) throw Error(ErrorCode::domain, "initial_conditions: tau must be > 0");
  if (t0 != 0.5) throw Error(ErrorCode::unsupported_t0, "initial_conditions: only t0 = 1/2 is supported", t0);
  return tangent_jet_from_frame(tau, t0, Frame{});
}

/// c[j][l]: component j of the tangent, basis function l (0-based).
struct CoefficientMatrix {
  std::array<std::array<Complex, 3>, 3> c{};
  double condition = 0.0;  // 2-norm condition of the column-equilibrated system
};

inline CoefficientMatrix solve_coefficients(double tau, const SeriesControl& control) {
  constexpr double t0 = 0.5;
  const InitialTangent ic = initial_conditions(tau, t0);
  Eigen::Matrix3cd m;
  for (int l = 0; l < 3; ++l) {
    const BasisJet j = eval_basis(basis_S(l + 1, tau), t0, control);
    m(0, l) = j.value;
    m(1, l) = j.d1;
    m(2, l) = j.d2;
  }
  Eigen::Matrix3cd scaled = m;
  for (int l = 0; l < 3; ++l) scaled.col(l) /= m.col(l).norm();
  const Eigen::JacobiSVD<Eigen::Matrix3cd> svd(scaled);
  const auto sv = svd.singularValues();
  const double cond = sv(2) > 0.0 ? sv(0) / sv(2) : std::numeric_limits<double>::infinity();
  if (!(cond <= 1e10))
    throw Error(ErrorCode::ill_conditioned,
                "solve_coefficients: initial-value system condition estimate " + std::to_string(cond) +
                    " exceeds 1e10");

  const Eigen::FullPivLU<Eigen::Matrix3cd> lu(m);
  CoefficientMatrix out;
  out.condition = cond;
  for (std::size_t j = 0; j < 3; ++j) {
    const Eigen::Vector3cd rhs(ic.T0[j], ic.T0p[j], ic.T0pp[j]);
    const Eigen::Vector3cd x = lu.solve(rhs);
    for (std::size_t l = 0; l < 3; ++l) out.c[j][l] = x(static_cast<Eigen::Index>(l));
  }
  return out;
}

/// Real tangent and its first three derivatives.
struct TangentJet {
  std::array<Vec3, 4> d{};
  double max_imag = 0.0;  // largest imaginary residue of the value
};

inline TangentJet tangent_jet(const std::array<BasisJet, 3>& basis_jets, const CoefficientMatrix& coeffs) {
  TangentJet out;
  for (std::size_t j = 0; j < 3; ++j) {
    for (std::size_t k = 0; k < 4; ++k) {
      Complex z = 0.0;
      for (std::size_t l = 0; l < 3; ++l) z += coeffs.c[j][l] * basis_jets[l].as_array()[k];
      out.d[k][j] = z.real();
      if (k == 0) out.max_imag = std::fmax(out.max_imag, std::fabs(z.imag()));
    }
  }
  return out;
}

inline TangentJet tangent_jet(double tau, const CoefficientMatrix& coeffs, double t, const SeriesControl& control) {
  std::array<BasisJet, 3> jets;
  for (int l = 0; l < 3; ++l) jets[static_cast<std::size_t>(l)] = eval_basis(basis_S(l + 1, tau), t, control);
  return tangent_jet(jets, coeffs);
}

inline constexpr double kRealnessTolerance = 1e-8;

inline Vec3 tangent(double tau, const CoefficientMatrix& coeffs, double t, const SeriesControl& control) {
  const TangentJet j = tangent_jet(tau, coeffs, t, control);
  if (j.max_imag > kRealnessTolerance)
    throw Error(ErrorCode::numeric_inconsistency,
                "tangent: imaginary residue " + std::to_string(j.max_imag) + " exceeds 1e-8", t);
  return j.d[0];
}

// ---------------------------------------------------------------------------
// The curve: U_l = integral S_l v dt.

enum class SeriesPath {
  double_sum,            // sum_n sum_m of the d_{ln} e_{lm} Gamma-ratio coefficients
  combined_4F3,          // the single sum over terminating 4F3(...; 1) coefficients
  termwise_integration,  // Cauchy product of the S_l series with (1 - t^2)^(-1/2)
};

inline const char* to_string(SeriesPath p) {
  switch (p) {
    case SeriesPath::double_sum: return "double_sum";
    case SeriesPath::combined_4F3: return "combined_4F3";
    case SeriesPath::termwise_integration: return "termwise_integration";
  }
  return "unknown";
}

/// Relative accuracy assumed for log-gamma built coefficients when sizing
/// error estimates.
inline constexpr double kCoefficientRelError = 1e-12;

/// Leading power of U_l: 2, 1 - i/tau, 1 + i/tau.
inline Complex u_leading_power(int index, double tau) { return basis_S(index, tau).exponent_rho + 1.0; }

/// U_l = sum_k coeffs[k] t^(leading_power + 2k).
struct UExpansion {
  int index = 1;
  Complex leading_power{};
  std::vector<Complex> coeffs;
  double coefficient_rel_error = 0.0;

  SeriesValue eval(double t, const SeriesControl& control) const {
    if (!(t > 0.0 && t < 1.0)) throw Error(ErrorCode::domain, "U series: t must lie in (0, 1)", t);
    const double t2 = t * t;
    Complex tw = std::exp(leading_power * std::log(t));
    Complex sum = 0.0;
    double abs_sum = 0.0;
    TailMonitor monitor(control);
    const std::size_t limit = std::min(coeffs.size(), static_cast<std::size_t>(control.max_terms));
    for (std::size_t k = 0; k < limit; ++k) {
      const Complex term = coeffs[k] * tw;
      sum += term;
      abs_sum += std::abs(term);
      if (monitor.observe(detail::relative_magnitude(term, sum)))
        return {sum,
                monitor.tail_bound(t2) * std::abs(sum) +
                    (8.0 * std::numeric_limits<double>::epsilon() + coefficient_rel_error) * abs_sum,
                monitor.count()};
      tw *= t2;
    }
    throw Error(ErrorCode::non_convergence,
                "U" + std::to_string(index) + " series did not converge in " + std::to_string(limit) + " terms", t);
  }
};

/// Coefficients of U_l from the terminating 4F3(...;1) closed forms.
inline UExpansion u_expansion_combined(int index, double tau, int count) {
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  const double y = 1.0 / (2.0 * tau);
  SeriesControl exact;
  exact.max_terms = 1;  // terminating sums ignore max_terms
  UExpansion u{index, u_leading_power(index, tau), {}, kCoefficientRelError};
  u.coeffs.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const double kd = static_cast<double>(k);
    HypergeometricSpec f43;
    f43.argument = 1.0;
    Complex front;
    if (index == 1) {
      f43.numerator_params = {0.5, 0.5, 1.5, -kd};
      f43.denominator_params = {0.5 - kd, Complex(1.5, -y), Complex(1.5, y)};
      front = kI / (2.0 * sqrt_pi * tau) * std::exp(log_gamma_ratio(0.5 + kd, 2.0 + kd));
    } else {
      const double sign = index == 2 ? -1.0 : 1.0;  // a = sign * i/(2 tau)
      const Complex a(0.0, sign * y);
      f43.numerator_params = {-kd, 1.0 + a, a, a};
      f43.denominator_params = {0.5 - kd, 0.5 + a, 1.0 + 2.0 * a};
      front = std::exp(-sign * std::numbers::pi / (2.0 * tau)) / sqrt_pi *
              std::exp(log_gamma_ratio(0.5 + kd, 1.0 + kd)) / Complex((1.0 + 2.0 * kd) * tau, sign);
    }
    u.coeffs.push_back(front * hyp_pFq(f43, exact).value);
  }
  return u;
}

/// Coefficients of U_l by integrating the S_l series term by term against
/// (1 - t^2)^(-1/2) = sum_m (1/2)_m / m! t^(2m).
inline UExpansion u_expansion_termwise(int index, double tau, int count) {
  const BasisFunction b = basis_S(index, tau);
  const std::vector<Complex> f = hypergeometric_coefficients(b.f32_spec, count);
  std::vector<double> binom(static_cast<std::size_t>(count));
  if (count > 0) binom[0] = 1.0;
  for (int m = 1; m < count; ++m)
    binom[static_cast<std::size_t>(m)] = binom[static_cast<std::size_t>(m - 1)] * (m - 0.5) / m;
  UExpansion u{index, b.exponent_rho + 1.0, {}, 0.0};
  u.coeffs.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    Complex conv = 0.0;
    for (int n = 0; n <= k; ++n) conv += f[static_cast<std::size_t>(n)] * binom[static_cast<std::size_t>(k - n)];
    u.coeffs.push_back(b.prefactor / tau * conv / (b.exponent_rho + 1.0 + 2.0 * static_cast<double>(k)));
  }
  return u;
}

/// Whether to use the e_{2m}, e_{3m} coefficients as printed, with a Gamma
/// around (2n tau + 2m tau + tau -+ i), or with that factor as a plain
/// linear term, which is what the 2F1^reg expansion actually produces.
enum class EForm { corrected, printed };

/// log d_{ln}: coefficient of t^(rho + 2n) in S_l / tau, from the Gamma-ratio displays.
inline Complex log_d_coefficient(int index, double tau, int n) {
  const double nd = static_cast<double>(n);
  const double log_sqrt_pi = 0.5 * std::log(std::numbers::pi);
  if (index == 1) {
    const double y = 1.0 / (2.0 * tau);
    const double x = std::numbers::pi * y;
    const double log_sech = -x - std::log1p(std::exp(-2.0 * x)) + std::log(2.0);
    return std::log(kI * (1.0 + tau * tau) / (2.0 * tau * tau * tau)) - log_sqrt_pi + log_sech +
           2.0 * log_gamma(0.5 + nd) + log_gamma(1.5 + nd) - log_gamma(1.0 + nd) -
           log_gamma(Complex(1.5 + nd, -y)) - log_gamma(Complex(1.5 + nd, y));
  }
  if (index != 2 && index != 3) throw Error(ErrorCode::domain, "d coefficient: index must be 1, 2 or 3");
  const double sign = index == 2 ? -1.0 : 1.0;
  const Complex a(0.0, sign / (2.0 * tau));
  // e^(+-pi/(2tau)) 2^(2a) Gamma(n+a)^2 Gamma(1+n+a) Gamma(1/2+a)^2
  //   / (sqrt(pi) tau Gamma(1+n) Gamma(1+n+2a) Gamma(a)^2 Gamma(n+1/2+a))
  return -sign * std::numbers::pi / (2.0 * tau) + 2.0 * a * std::log(2.0) + 2.0 * log_gamma(nd + a) +
         log_gamma(1.0 + nd + a) + 2.0 * log_gamma(0.5 + a) - log_sqrt_pi - std::log(tau) -
         log_gamma(1.0 + nd) - log_gamma(1.0 + nd + 2.0 * a) - 2.0 * log_gamma(a) - log_gamma(nd + 0.5 + a);
}

/// log e_{lm} for outer index n: coefficient of t^(2m) in the 2F1^reg factor.
inline Complex log_e_coefficient(int index, double tau, int n, int m, EForm form = EForm::corrected) {
  const double nd = static_cast<double>(n), md = static_cast<double>(m);
  const double log_sqrt_pi = 0.5 * std::log(std::numbers::pi);
  const Complex base = log_gamma(0.5 + md) - log_sqrt_pi - log_gamma(1.0 + md);
  if (index == 1) return base - std::log(nd + md + 1.0) - log_gamma(1.0 + nd);
  const double sign = index == 2 ? -1.0 : 1.0;
  const Complex lin(2.0 * nd * tau + 2.0 * md * tau + tau, sign);
  const Complex b(nd + 0.5, sign / (2.0 * tau));
  const Complex denom = form == EForm::printed ? log_gamma(lin) : std::log(lin);
  return std::log(2.0 * tau) + base - denom - log_gamma(b);
}

/// log of the outer weight multiplying d_{ln} in the double sum: n!/2 or Gamma(n + 1/2 + a)/2.
inline Complex log_outer_weight(int index, double tau, int n) {
  const double nd = static_cast<double>(n);
  if (index == 1) return log_gamma(1.0 + nd) - std::log(2.0);
  const double sign = index == 2 ? -1.0 : 1.0;
  return log_gamma(Complex(nd + 0.5, sign / (2.0 * tau))) - std::log(2.0);
}

namespace detail {

inline SeriesValue u_double_sum_impl(int index, double tau, double t, const SeriesControl& control, EForm form) {
  const Complex lead = u_leading_power(index, tau);
  const double lt = std::log(t);
  Complex total = 0.0;
  double inner_err = 0.0;
  double abs_sum = 0.0;
  TailMonitor outer(control);
  for (int n = 0;; ++n) {
    if (outer.count() >= control.max_terms)
      throw Error(ErrorCode::non_convergence, "U double sum: outer series did not converge", t);
    const Complex log_w = log_outer_weight(index, tau, n) + log_d_coefficient(index, tau, n);
    Complex inner = 0.0;
    TailMonitor mon(control);
    for (int m = 0;; ++m) {
      if (mon.count() >= control.max_terms)
        throw Error(ErrorCode::non_convergence, "U double sum: inner series did not converge", t);
      const Complex power = lead + 2.0 * static_cast<double>(n + m);
      const Complex term = std::exp(log_w + log_e_coefficient(index, tau, n, m, form) + power * lt);
      inner += term;
      abs_sum += std::abs(term);
      if (mon.observe(relative_magnitude(term, inner))) {
        inner_err += mon.tail_bound(t * t) * std::abs(inner);
        break;
      }
    }
    total += inner;
    if (outer.observe(relative_magnitude(inner, total))) {
      const double err = outer.tail_bound(t * t) * std::abs(total) + inner_err +
                         8.0 * std::numeric_limits<double>::epsilon() * abs_sum + kCoefficientRelError * abs_sum;
      return {total, err, outer.count()};
    }
  }
}

}  // namespace detail

/// Double sum with the d/e coefficients; `form` selects the printed or the
/// corrected e_{2m}, e_{3m}.
inline SeriesValue u_double_sum(int index, double tau, double t, const SeriesControl& control,
                                EForm form = EForm::corrected) {
  if (!(t > 0.0 && t < 1.0)) throw Error(ErrorCode::domain, "gamma_U: t must lie in (0, 1)", t);
  return detail::with_endpoint_retry(t, control, [&](const SeriesControl& c) {
    return detail::u_double_sum_impl(index, tau, t, c, form);
  });
}

/// U_l(t) with no constant term, summed along the requested route.
inline SeriesValue gamma_U(int index, double tau, double t, const SeriesControl& control, SeriesPath path) {
  if (!(tau > 0.0)) throw Error(ErrorCode::domain, "gamma_U: tau must be > 0");
  if (index < 1 || index > 3) throw Error(ErrorCode::domain, "gamma_U: index must be 1, 2 or 3");
  if (!(t > 0.0 && t < 1.0)) throw Error(ErrorCode::domain, "gamma_U: t must lie in (0, 1)", t);
  control.validate();
  if (path == SeriesPath::double_sum) return u_double_sum(index, tau, t, control);
  return detail::with_endpoint_retry(t, control, [&](const SeriesControl& c) {
    const UExpansion u = path == SeriesPath::combined_4F3 ? u_expansion_combined(index, tau, c.max_terms)
                                                          : u_expansion_termwise(index, tau, c.max_terms);
    return u.eval(t, c);
  });
}

struct PathComparison {
  SeriesValue first;
  SeriesValue second;
  double difference = 0.0;
  double budget = 0.0;  // sum of both error estimates
  bool agree() const { return difference <= budget; }
};

inline PathComparison compare_U_paths(int index, double tau, double t, const SeriesControl& control,
                                      SeriesPath first, SeriesPath second) {
  PathComparison pc;
  pc.first = gamma_U(index, tau, t, control, first);
  pc.second = gamma_U(index, tau, t, control, second);
  pc.difference = std::abs(pc.first.value - pc.second.value);
  pc.budget = pc.first.error_estimate + pc.second.error_estimate;
  return pc;
}

/// gamma_U along `path` after checking the printed routes against each
/// other and against termwise integration. Throws path_disagreement when any
/// pair differs by more than its combined error estimate.
inline SeriesValue gamma_U_checked(int index, double tau, double t, const SeriesControl& control,
                                   SeriesPath path = SeriesPath::combined_4F3) {
  const SeriesValue ds = gamma_U(index, tau, t, control, SeriesPath::double_sum);
  const SeriesValue cf = gamma_U(index, tau, t, control, SeriesPath::combined_4F3);
  const SeriesValue tw = gamma_U(index, tau, t, control, SeriesPath::termwise_integration);
  const auto check = [&](const SeriesValue& a, const SeriesValue& b, const char* what) {
    const double diff = std::abs(a.value - b.value);
    if (diff > a.error_estimate + b.error_estimate)
      throw Error(ErrorCode::path_disagreement,
                  "gamma_U: U" + std::to_string(index) + " " + what + " differ by " + std::to_string(diff), t);
  };
  check(ds, cf, "double_sum and combined_4F3");
  check(cf, tw, "combined_4F3 and termwise_integration");
  switch (path) {
    case SeriesPath::double_sum: return ds;
    case SeriesPath::combined_4F3: return cf;
    case SeriesPath::termwise_integration: return tw;
  }
  return cf;
}

/// Initial point that puts the sphere's center at the origin:
/// gamma(t0) = -(t0 N0 + sqrt(1 - t0^2) B0).
inline Vec3 center_offset(double /*tau*/, double t0, const Frame& frame) {
  if (!(t0 > 0.0 && t0 < 1.0)) throw Error(ErrorCode::domain, "center_offset: t0 must lie in (0, 1)", t0);
  return -(t0 * frame.N + std::sqrt(1.0 - t0 * t0) * frame.B);
}

/// gamma(t) = sum_l c_{jl} (U_l(t) - U_l(t0)) + center_offset, via the 4F3 route.
inline Vec3 curve_point(double tau, const CoefficientMatrix& coeffs, double t, const SeriesControl& control) {
  constexpr double t0 = 0.5;
  std::array<Complex, 3> du{};
  for (int l = 0; l < 3; ++l)
    du[static_cast<std::size_t>(l)] = gamma_U(l + 1, tau, t, control, SeriesPath::combined_4F3).value -
                                      gamma_U(l + 1, tau, t0, control, SeriesPath::combined_4F3).value;
  Vec3 p = center_offset(tau, t0, Frame{});
  double max_imag = 0.0;
  for (std::size_t j = 0; j < 3; ++j) {
    Complex z = 0.0;
    for (std::size_t l = 0; l < 3; ++l) z += coeffs.c[j][l] * du[l];
    p[j] += z.real();
    max_imag = std::fmax(max_imag, std::fabs(z.imag()));
  }
  if (max_imag > kRealnessTolerance)
    throw Error(ErrorCode::numeric_inconsistency,
                "curve_point: imaginary residue " + std::to_string(max_imag) + " exceeds 1e-8", t);
  return p;
}

/// Precomputed closed-form curve for repeated evaluation at many t.
class ClosedFormCurve {
 public:
  static constexpr double kT0 = 0.5;

  explicit ClosedFormCurve(double tau, const SeriesControl& control = {}, SeriesPath path = SeriesPath::combined_4F3)
      : tau_(tau), control_(control), path_(path) {
    if (!(tau > 0.0)) throw Error(ErrorCode::domain, "ClosedFormCurve: tau must be > 0");
    control.validate();
    if (path == SeriesPath::double_sum)
      throw Error(ErrorCode::config, "ClosedFormCurve: the double sum has no precomputed form");
    coeffs_ = solve_coefficients(tau, control);
    const int count = 2 * control.max_terms;
    for (int l = 0; l < 3; ++l) {
      const auto i = static_cast<std::size_t>(l);
      basis_[i] = basis_S(l + 1, tau);
      u_[i] = path == SeriesPath::combined_4F3 ? u_expansion_combined(l + 1, tau, count)
                                               : u_expansion_termwise(l + 1, tau, count);
      u_t0_[i] = eval_u(i, kT0).value;
    }
    center_ = center_offset(tau, kT0, Frame{});
  }

  double tau() const noexcept { return tau_; }
  const CoefficientMatrix& coefficients() const noexcept { return coeffs_; }
  const SeriesControl& control() const noexcept { return control_; }
  SeriesPath path() const noexcept { return path_; }
  const BasisFunction& basis(int index) const { return basis_.at(static_cast<std::size_t>(index - 1)); }

  FrenetState initial_state() const { return {center_, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}}; }

  Vec3 point(double t) const {
    if (t == kT0) return center_;
    Vec3 p = center_;
    double max_imag = 0.0;
    std::array<Complex, 3> du{};
    for (std::size_t l = 0; l < 3; ++l) du[l] = eval_u(l, t).value - u_t0_[l];
    for (std::size_t j = 0; j < 3; ++j) {
      Complex z = 0.0;
      for (std::size_t l = 0; l < 3; ++l) z += coeffs_.c[j][l] * du[l];
      p[j] += z.real();
      max_imag = std::fmax(max_imag, std::fabs(z.imag()));
    }
    if (max_imag > kRealnessTolerance)
      throw Error(ErrorCode::numeric_inconsistency,
                  "curve_point: imaginary residue " + std::to_string(max_imag) + " exceeds 1e-8", t);
    return p;
  }

  TangentJet tangent_jet(double t) const {
    std::array<BasisJet, 3> jets;
    for (std::size_t l = 0; l < 3; ++l) jets[l] = eval_basis(basis_[l], t, control_);
    return ctcurve::tangent_jet(jets, coeffs_);
  }

  Vec3 tangent(double t) const {
    const TangentJet j = tangent_jet(t);
    if (j.max_imag > kRealnessTolerance)
      throw Error(ErrorCode::numeric_inconsistency,
                  "tangent: imaginary residue " + std::to_string(j.max_imag) + " exceeds 1e-8", t);
    return j.d[0];
  }

  /// Points along the curve; the tangent is stored as a partial frame when requested.
  SampledCurve sample(std::span<const double> ts, bool with_frames = false) const {
    SampledCurve out;
    out.params = {tau_, 0.0, kT0};
    out.source = CurveSource::closed_form;
    out.samples.reserve(ts.size());
    for (double t : ts) {
      CurveSample smp{t, s_of_t(out.params, t), point(t), std::nullopt};
      if (with_frames) {
        const TangentJet j = tangent_jet(t);
        Frame f;
        f.T = j.d[0];
        f.N = normalized(j.d[1]);
        f.B = cross(f.T, f.N);
        smp.frame = f;
      }
      out.samples.push_back(smp);
    }
    return out;
  }

 private:
  SeriesValue eval_u(std::size_t l, double t) const {
    return detail::with_endpoint_retry(t, control_, [&](const SeriesControl& c) { return u_[l].eval(t, c); });
  }

  double tau_;
  SeriesControl control_;
  SeriesPath path_;
  CoefficientMatrix coeffs_;
  std::array<BasisFunction, 3> basis_;
  std::array<UExpansion, 3> u_;
  std::array<Complex, 3> u_t0_{};
  Vec3 center_;
};

}  // namespace ctcurve
