#pragma once

// Complex-parameter special functions: log-gamma, Pochhammer symbols and
// truncated generalized hypergeometric series with explicit stop rules.
//
// Every function here is a pure function of its arguments.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ctcurve/error.hpp"

namespace ctcurve {

using Complex = std::complex<double>;

inline constexpr Complex kI{0.0, 1.0};

/// Truncation policy shared by every series in the library.
struct SeriesControl {
  int max_terms = 400;
  double tail_tolerance = 1e-14;  // absolute
  int consecutive_small_terms = 3;

  void validate() const {
    if (max_terms < 1) throw Error(ErrorCode::config, "SeriesControl: max_terms must be >= 1");
    if (!(tail_tolerance > 0.0) || !std::isfinite(tail_tolerance))
      throw Error(ErrorCode::config, "SeriesControl: tail_tolerance must be positive");
    if (consecutive_small_terms < 1)
      throw Error(ErrorCode::config, "SeriesControl: consecutive_small_terms must be >= 1");
  }

  SeriesControl doubled() const { return {2 * max_terms, tail_tolerance, consecutive_small_terms}; }
};

/// A truncated series sum together with a bound on what was left out.
struct SeriesValue {
  Complex value{};
  double error_estimate = 0.0;
  int terms = 0;
};

/// Implements the stop rule: `consecutive_small_terms` successive terms below
/// the tail tolerance, each no larger than its predecessor.
class TailMonitor {
 public:
  explicit TailMonitor(const SeriesControl& control) : control_(control) {}

  /// Feed |term| in summation order; returns true once the rule fires.
  bool observe(double magnitude) {
    prev_ = last_;
    last_ = magnitude;
    ++count_;
    abs_sum_ += magnitude;
    const bool decreasing = count_ == 1 || magnitude <= prev_;
    if (magnitude < control_.tail_tolerance && decreasing)
      ++small_run_;
    else
      small_run_ = 0;
    return small_run_ >= control_.consecutive_small_terms;
  }

  int count() const noexcept { return count_; }
  bool exhausted() const noexcept { return count_ >= control_.max_terms; }

  /// Geometric bound on the neglected tail. The ratio used is the larger of
  /// the last observed term ratio and `ratio_floor` (the asymptotic ratio).
  double tail_bound(double ratio_floor = 0.0) const {
    if (last_ == 0.0) return 0.0;
    if (count_ < 2 || prev_ == 0.0) return last_;
    const double r = std::max(last_ / prev_, ratio_floor);
    if (r >= 1.0) return last_ * static_cast<double>(control_.max_terms);
    return last_ * r / (1.0 - r);
  }

  double rounding_bound() const noexcept {
    return 8.0 * std::numeric_limits<double>::epsilon() * abs_sum_;
  }

  double abs_sum() const noexcept { return abs_sum_; }

 private:
  SeriesControl control_;
  double last_ = 0.0;
  double prev_ = 0.0;
  double abs_sum_ = 0.0;
  int count_ = 0;
  int small_run_ = 0;
};

namespace detail {

inline bool is_nonpositive_integer(const Complex& z) {
  return z.imag() == 0.0 && z.real() <= 0.0 && z.real() == std::floor(z.real());
}

inline std::string format_complex(const Complex& z) {
  std::ostringstream os;
  os.precision(17);
  os << '(' << z.real() << ',' << z.imag() << ')';
  return os.str();
}

// Lanczos approximation, g = 7, nine coefficients. Valid for Re(z) >= 1/2.
inline Complex lanczos_log_gamma(Complex z) {
  static constexpr double g = 7.0;
  static constexpr std::array<double, 9> p = {
      0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
      771.32342877765313,      -176.61502916214059,   12.507343278686905,
      -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
  z -= 1.0;
  Complex x = p[0];
  for (std::size_t i = 1; i < p.size(); ++i) x += p[i] / (z + static_cast<double>(i));
  const Complex t = z + g + 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t + std::log(x);
}

}  // namespace detail

/// Principal-branch log Gamma. For Re(z) < 1/2 the argument is shifted up
/// with the recurrence, summing principal logs, which keeps the branch cut on
/// the negative real axis.
inline Complex log_gamma(Complex z) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
    throw Error(ErrorCode::domain, "log_gamma: non-finite argument");
  if (detail::is_nonpositive_integer(z))
    throw Error(ErrorCode::pole, "log_gamma: pole at " + detail::format_complex(z));
  if (z.real() >= 0.5) return detail::lanczos_log_gamma(z);
  const int shift = static_cast<int>(std::ceil(0.5 - z.real()));
  Complex logs = 0.0;
  for (int k = 0; k < shift; ++k) logs += std::log(z + static_cast<double>(k));
  return detail::lanczos_log_gamma(z + static_cast<double>(shift)) - logs;
}

inline Complex gamma(Complex z) { return std::exp(log_gamma(z)); }

/// 1/Gamma(z); zero at the poles of Gamma.
inline Complex rgamma(Complex z) {
  if (detail::is_nonpositive_integer(z)) return 0.0;
  return std::exp(-log_gamma(z));
}

/// Rising factorial x(x+1)...(x+n-1) in product form. Total.
inline Complex pochhammer(Complex x, int n) {
  if (n < 0) throw Error(ErrorCode::domain, "pochhammer: negative order");
  Complex r = 1.0;
  for (int k = 0; k < n; ++k) r *= x + static_cast<double>(k);
  return r;
}

/// log Gamma(a) - log Gamma(b). Use this for Gamma ratios with large
/// arguments instead of dividing Gamma values.
inline Complex log_gamma_ratio(Complex a, Complex b) { return log_gamma(a) - log_gamma(b); }

struct HypergeometricSpec {
  std::vector<Complex> numerator_params;
  std::vector<Complex> denominator_params;
  Complex argument{};

  std::size_t p() const noexcept { return numerator_params.size(); }
  std::size_t q() const noexcept { return denominator_params.size(); }

  /// Index m such that the series stops after the z^m term, if any numerator
  /// parameter is a non-positive integer -m.
  std::optional<int> termination_order() const {
    std::optional<int> m;
    for (const auto& a : numerator_params) {
      if (detail::is_nonpositive_integer(a)) {
        const int k = static_cast<int>(-a.real());
        m = m ? std::min(*m, k) : k;
      }
    }
    return m;
  }

  void validate() const {
    const auto stop = termination_order();
    for (const auto& b : denominator_params) {
      if (!std::isfinite(b.real()) || !std::isfinite(b.imag()))
        throw Error(ErrorCode::invalid_spec, "hypergeometric: non-finite denominator parameter");
      if (detail::is_nonpositive_integer(b)) {
        const int k = static_cast<int>(-b.real());
        // (b)_n vanishes from n = k+1 on; fine only if the series ends first.
        if (!stop || *stop > k)
          throw Error(ErrorCode::invalid_spec,
                      "hypergeometric: denominator parameter " + detail::format_complex(b) +
                          " is zero or a negative integer");
      }
    }
    if (stop) return;
    const double r = std::abs(argument);
    if (p() == q() + 1 && !(r < 1.0))
      throw Error(ErrorCode::domain, "hypergeometric: |argument| must be < 1 for p = q + 1");
    if (p() > q() + 1 && r != 0.0)
      throw Error(ErrorCode::domain, "hypergeometric: divergent series for p > q + 1");
  }
};

/// Partial sum of the generalized hypergeometric series (summed from n = 0)
/// with a geometric tail estimate. Terminating series are summed exactly.
inline SeriesValue hyp_pFq(const HypergeometricSpec& spec, const SeriesControl& control) {
  control.validate();
  spec.validate();
  const Complex z = spec.argument;
  const auto stop = spec.termination_order();

  TailMonitor monitor(control);
  Complex term = 1.0;
  Complex sum = 1.0;
  monitor.observe(1.0);
  bool converged = false;
  int n = 0;
  for (; monitor.count() < control.max_terms || stop; ++n) {
    if (stop && n == *stop) {
      converged = true;
      break;
    }
    Complex ratio = z / static_cast<double>(n + 1);
    for (const auto& a : spec.numerator_params) ratio *= a + static_cast<double>(n);
    for (const auto& b : spec.denominator_params) ratio /= b + static_cast<double>(n);
    term *= ratio;
    sum += term;
    if (monitor.observe(std::abs(term)) && !stop) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw Error(ErrorCode::non_convergence,
                "hyp_pFq: tail criterion not met within " + std::to_string(control.max_terms) + " terms");
  SeriesValue out;
  out.value = sum;
  out.terms = monitor.count();
  out.error_estimate = monitor.rounding_bound();
  if (!stop) {
    const double floor = spec.p() == spec.q() + 1 ? std::abs(z) : 0.0;
    out.error_estimate += monitor.tail_bound(floor);
  }
  return out;
}

/// 2F1(a,b;c;z)/Gamma(c) summed term-wise as sum (a)_n (b)_n z^n / (n! Gamma(c+n)),
/// so c at a non-positive integer is handled without dividing by infinity.
inline SeriesValue hyp_2F1_regularized(Complex a, Complex b, Complex c, Complex z,
                                       const SeriesControl& control) {
  control.validate();
  const bool terminating = detail::is_nonpositive_integer(a) || detail::is_nonpositive_integer(b);
  if (!terminating && !(std::abs(z) < 1.0))
    throw Error(ErrorCode::domain, "hyp_2F1_regularized: |z| must be < 1");

  // First index with c + n off the poles of Gamma.
  int n0 = 0;
  if (detail::is_nonpositive_integer(c)) n0 = static_cast<int>(-c.real()) + 1;

  Complex term = pochhammer(a, n0) * pochhammer(b, n0) * std::pow(z, n0) * rgamma(c + static_cast<double>(n0));
  for (int k = 1; k <= n0; ++k) term /= static_cast<double>(k);

  TailMonitor monitor(control);
  Complex sum = term;
  monitor.observe(std::abs(term));
  bool converged = term == Complex(0.0);
  for (int n = n0; !converged && monitor.count() < control.max_terms; ++n) {
    const Complex ratio = (a + static_cast<double>(n)) * (b + static_cast<double>(n)) * z /
                          ((c + static_cast<double>(n)) * static_cast<double>(n + 1));
    term *= ratio;
    sum += term;
    converged = monitor.observe(std::abs(term)) || term == Complex(0.0);
  }
  if (!converged)
    throw Error(ErrorCode::non_convergence,
                "hyp_2F1_regularized: tail criterion not met within " +
                    std::to_string(control.max_terms) + " terms");
  return {sum, monitor.tail_bound(std::abs(z)) + monitor.rounding_bound(), monitor.count()};
}

}  // namespace ctcurve
