#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "ctcurve/closedform.hpp"
#include "ctcurve/oracle.hpp"

using namespace ctcurve;

namespace {

constexpr double kPi = std::numbers::pi;
const double kSqrt3 = std::sqrt(3.0);

double rel(Complex a, Complex b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

Complex integrate(const std::function<Complex(double)>& f, double a, double b) {
  using boost::math::quadrature::gauss_kronrod;
  const double re = gauss_kronrod<double, 61>::integrate([&](double t) { return f(t).real(); }, a, b, 15, 1e-14);
  const double im = gauss_kronrod<double, 61>::integrate([&](double t) { return f(t).imag(); }, a, b, 15, 1e-14);
  return {re, im};
}

}  // namespace

TEST(TangentOde, IndicialAndUpperPolynomials) {
  for (double tau : {0.5, 1.0, 2.0}) {
    const TangentOde ode(tau);
    for (Complex r : {Complex(0.3, 0.0), Complex(-1.0, 2.0), Complex(2.5, -0.5)}) {
      EXPECT_LE(std::abs(ode.lower(r) + (r - 1.0) * (tau * tau * r * r + 1.0)), 1e-12 * std::abs(r * r * r) + 1e-12);
      EXPECT_LE(std::abs(ode.upper(r) - tau * tau * r * r * (r + 2.0)), 1e-12 * std::abs(r * r * r) + 1e-12);
    }
  }
  EXPECT_THROW(TangentOde(0.0), Error);
}

TEST(TangentOde, ZeroFunctionHasZeroResidual) {
  const auto r = TangentOde(1.0).residual(0.4, {0.0, 0.0, 0.0, 0.0});
  EXPECT_EQ(r.value, Complex(0.0));
  EXPECT_EQ(r.normalized(), 0.0);
}

TEST(IndicialRoots, Values) {
  const auto r1 = indicial_roots(1.0);
  EXPECT_EQ(r1[0], Complex(1.0));
  EXPECT_EQ(r1[1], Complex(0.0, -1.0));
  EXPECT_EQ(r1[2], Complex(0.0, 1.0));
  const auto r2 = indicial_roots(2.0);
  EXPECT_EQ(r2[1], Complex(0.0, -0.5));
  EXPECT_EQ(r2[2], Complex(0.0, 0.5));
  for (double tau : {0.1, 1.0, 7.0}) {
    const TangentOde ode(tau);
    for (const auto& r : indicial_roots(tau)) EXPECT_LE(std::abs(ode.lower(r)), 1e-12);
    const auto rr = indicial_roots(tau);
    EXPECT_NE(rr[0], rr[1]);
    EXPECT_NE(rr[1], rr[2]);
  }
}

TEST(Frobenius, Basics) {
  const FrobeniusSeries fs = frobenius_series(1.0, 1.0, 30);
  EXPECT_EQ(fs.coefficients.size(), 30u);
  EXPECT_EQ(fs.coefficients[0], Complex(1.0));
  EXPECT_THROW(frobenius_series(1.0, 0.5, 10), Error);
  EXPECT_THROW(frobenius_series(1.0, 1.0, 501), Error);
  EXPECT_THROW(frobenius_series(1.0, 1.0, 0), Error);
}

TEST(Frobenius, TruncationResidualIsTailOnly) {
  const TangentOde ode(1.0);
  for (const auto& rho : indicial_roots(1.0)) {
    const FrobeniusSeries fs = frobenius_series(1.0, rho, 30);
    const auto r = ode.residual(0.3, fs.eval(0.3).as_array());
    EXPECT_LE(r.normalized(), 1e-10);
  }
}

TEST(Basis, MatchesFrobeniusCoefficients) {
  for (double tau : {0.5, 1.0, 2.0})
    for (int l = 1; l <= 3; ++l) {
      const BasisFunction b = basis_S(l, tau);
      const FrobeniusSeries fs = frobenius_series(tau, b.exponent_rho, 30);
      const auto f = hypergeometric_coefficients(b.f32_spec, 30);
      for (std::size_t k = 0; k < 30; ++k) EXPECT_LE(rel(fs.coefficients[k], f[k]), 1e-10) << l << " " << k;
    }
}

TEST(Basis, ExponentsAndPrefactors) {
  const double tau = 0.8;
  EXPECT_EQ(basis_S(1, tau).exponent_rho, Complex(1.0));
  EXPECT_EQ(basis_S(1, tau).prefactor, kI);
  EXPECT_NEAR(basis_S(2, tau).exponent_rho.imag(), -1.0 / tau, 1e-15);
  EXPECT_NEAR(basis_S(3, tau).exponent_rho.imag(), 1.0 / tau, 1e-15);
  EXPECT_NEAR(basis_S(2, tau).prefactor.real(), std::exp(kPi / (2 * tau)), 1e-12);
  EXPECT_NEAR(basis_S(3, tau).prefactor.real(), std::exp(-kPi / (2 * tau)), 1e-15);
  EXPECT_THROW(basis_S(4, tau), Error);
}

TEST(Basis, FirstBasisLeadingBehaviour) {
  const BasisJet j = eval_basis(basis_S(1, 1.0), 1e-6, SeriesControl{});
  EXPECT_NEAR(std::abs(j.value / 1e-6 - kI), 0.0, 1e-10);
  EXPECT_NEAR(std::abs(j.d1 - kI), 0.0, 1e-10);
  // Purely imaginary for real t.
  for (double t : {0.2, 0.7}) EXPECT_LE(std::fabs(eval_basis(basis_S(1, 1.3), t, SeriesControl{}).value.real()), 1e-16);
}

TEST(Basis, ConjugateStructure) {
  // The conjugate relation holds for the series parts; the principal-branch
  // prefactors differ by e^(pi/tau) in modulus.
  for (double tau : {0.5, 1.0, 2.0}) {
    const BasisFunction b2 = basis_S(2, tau), b3 = basis_S(3, tau);
    for (double t : {0.2, 0.5, 0.8}) {
      const Complex s2 = eval_basis(b2, t, SeriesControl{}).value;
      const Complex s3 = eval_basis(b3, t, SeriesControl{}).value;
      EXPECT_LE(std::abs(std::conj(s2 / b2.prefactor) - s3 / b3.prefactor), 1e-12 * std::abs(s3 / b3.prefactor));
      EXPECT_LE(std::abs(s3 - std::exp(-kPi / tau) * std::conj(s2)), 1e-12 * std::abs(s3));
    }
  }
}

TEST(Basis, AgreesWithFrobeniusEvaluation) {
  for (int l = 1; l <= 3; ++l) {
    const BasisFunction b = basis_S(l, 1.0);
    const BasisJet a = eval_basis(b, 0.5, SeriesControl{});
    const BasisJet f = frobenius_series(1.0, b.exponent_rho, 120).eval(0.5);
    EXPECT_LE(rel(a.value, b.prefactor * f.value), 1e-10);
    EXPECT_LE(rel(a.d1, b.prefactor * f.d1), 1e-10);
    EXPECT_LE(rel(a.d2, b.prefactor * f.d2), 1e-10);
  }
}

TEST(Basis, SatisfiesTangentOdeAtRandomPoints) {
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> ut(0.05, 0.95), utau(0.3, 3.0);
  for (int i = 0; i < 20; ++i) {
    const double t = ut(rng), tau = utau(rng);
    const TangentOde ode(tau);
    for (int l = 1; l <= 3; ++l) {
      const auto r = ode.residual(t, eval_basis(basis_S(l, tau), t, SeriesControl{}).as_array());
      EXPECT_LE(r.normalized(), 1e-8) << "t=" << t << " tau=" << tau << " S" << l;
    }
  }
}

TEST(Basis, ResidualByFiniteDifferences) {
  // Independent of the term-wise derivatives: 7-point differences of the values.
  for (double tau : {0.5, 1.0, 2.0})
    for (double t : {0.3, 0.6})
      for (int l = 1; l <= 3; ++l) {
        const BasisFunction b = basis_S(l, tau);
        const double h = 1e-3;
        std::array<Complex, 7> f;
        for (int k = -3; k <= 3; ++k) f[k + 3] = eval_basis(b, t + k * h, SeriesControl{}).value;
        const Complex d1 = (-f[0] + 9.0 * f[1] - 45.0 * f[2] + 45.0 * f[4] - 9.0 * f[5] + f[6]) / (60.0 * h);
        const Complex d2 =
            (2.0 * f[0] - 27.0 * f[1] + 270.0 * f[2] - 490.0 * f[3] + 270.0 * f[4] - 27.0 * f[5] + 2.0 * f[6]) /
            (180.0 * h * h);
        const Complex d3 = (f[0] - 8.0 * f[1] + 13.0 * f[2] - 13.0 * f[4] + 8.0 * f[5] - f[6]) / (8.0 * h * h * h);
        const auto r = TangentOde(tau).residual(t, {f[3], d1, d2, d3});
        EXPECT_LE(r.normalized(), 1e-6) << tau << " " << t << " S" << l;
      }
}

TEST(Basis, PerturbedExponentFailsResidual) {
  BasisFunction b = basis_S(2, 1.0);
  b.exponent_rho += 1e-3;
  const auto r = TangentOde(1.0).residual(0.3, eval_basis(b, 0.3, SeriesControl{}).as_array());
  EXPECT_GT(r.normalized(), 1e-8);
}

TEST(Basis, DomainAndNonConvergence) {
  EXPECT_THROW(eval_basis(basis_S(1, 1.0), 1.0, SeriesControl{}), Error);
  EXPECT_THROW(eval_basis(basis_S(1, 1.0), 0.0, SeriesControl{}), Error);
  SeriesControl tiny;
  tiny.max_terms = 4;
  try {
    eval_basis(basis_S(1, 1.0), 0.5, tiny);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::non_convergence);
    ASSERT_TRUE(e.at_t().has_value());
    EXPECT_EQ(*e.at_t(), 0.5);
  }
}

TEST(Basis, EndpointRetryDoublesTerms) {
  SeriesControl c;
  c.max_terms = 200;
  const BasisJet j = eval_basis(basis_S(1, 1.0), 0.94, c);
  EXPECT_GT(j.terms, 200);
  EXPECT_THROW(eval_basis(basis_S(1, 1.0), 0.85, SeriesControl{20, 1e-14, 3}), Error);
}

TEST(InitialConditions, PrintedValues) {
  const InitialTangent ic = initial_conditions(1.0, 0.5);
  EXPECT_EQ(ic.T0, (Vec3{1, 0, 0}));
  EXPECT_NEAR(ic.T0p.y, 4.0 / kSqrt3, 1e-14);
  EXPECT_EQ(ic.T0p.x, 0.0);
  EXPECT_EQ(ic.T0p.z, 0.0);
  EXPECT_NEAR(ic.T0pp.x, -16.0 / 3.0, 1e-13);
  EXPECT_NEAR(ic.T0pp.y, -16.0 / (3.0 * kSqrt3), 1e-13);
  EXPECT_NEAR(ic.T0pp.z, 8.0 / 3.0, 1e-13);
  const InitialTangent ic2 = initial_conditions(2.0, 0.5);
  EXPECT_NEAR(ic2.T0p.y, 2.0 / kSqrt3, 1e-14);
  for (double tau : {0.5, 3.0}) {
    const InitialTangent i = initial_conditions(tau, 0.5);
    EXPECT_NEAR(i.T0pp.x, -16.0 / (3.0 * tau * tau), 1e-13);
    EXPECT_NEAR(i.T0pp.y, -16.0 / (3.0 * kSqrt3 * tau), 1e-13);
    EXPECT_NEAR(i.T0pp.z, 8.0 / (3.0 * tau), 1e-13);
  }
}

TEST(InitialConditions, RejectsOtherBasePoints) {
  try {
    initial_conditions(1.0, 0.3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::unsupported_t0);
  }
}

TEST(Coefficients, ReconstructInitialData) {
  for (double tau : {0.5, 1.0, 2.0}) {
    const CoefficientMatrix c = solve_coefficients(tau, SeriesControl{});
    EXPECT_LT(c.condition, 1e10);
    const TangentJet j = tangent_jet(tau, c, 0.5, SeriesControl{});
    const InitialTangent ic = initial_conditions(tau, 0.5);
    EXPECT_LE(max_abs_component(j.d[0] - ic.T0), 1e-10);
    EXPECT_LE(max_abs_component(j.d[1] - ic.T0p), 1e-10);
    EXPECT_LE(max_abs_component(j.d[2] - ic.T0pp), 1e-10);
  }
}

TEST(Coefficients, ColumnStructure) {
  for (double tau : {0.5, 1.0, 2.0}) {
    const CoefficientMatrix c = solve_coefficients(tau, SeriesControl{});
    const Complex p2 = basis_S(2, tau).prefactor, p3 = basis_S(3, tau).prefactor;
    for (int j = 0; j < 3; ++j) {
      EXPECT_LE(std::fabs(c.c[j][0].real()), 1e-10 * std::abs(c.c[j][0]) + 1e-15);
      // c_{j3} S_3 is the conjugate of c_{j2} S_2.
      EXPECT_LE(std::abs(c.c[j][2] * p3 - std::conj(c.c[j][1] * p2)), 1e-10 * std::abs(c.c[j][2] * p3));
      EXPECT_LE(std::abs(c.c[j][2] - std::exp(kPi / tau) * std::conj(c.c[j][1])), 1e-10 * std::abs(c.c[j][2]));
    }
  }
}

TEST(Coefficients, SmallTorsionStaysSolvable) {
  const CoefficientMatrix c = solve_coefficients(0.1, SeriesControl{});
  EXPECT_LT(c.condition, 1e3);
}

TEST(Tangent, RealUnitAndPinnedAtBasePoint) {
  const SeriesControl sc;
  for (double tau : {0.5, 1.0, 2.0}) {
    const CoefficientMatrix c = solve_coefficients(tau, sc);
    EXPECT_LE(max_abs_component(tangent(tau, c, 0.5, sc) - Vec3{1, 0, 0}), 1e-10);
    for (int i = 1; i <= 9; ++i) {
      const double t = 0.1 * i;
      EXPECT_LE(tangent_jet(tau, c, t, sc).max_imag, 1e-8);
    }
  }
  const CoefficientMatrix c1 = solve_coefficients(1.0, sc);
  for (double t : {0.1, 0.3, 0.7, 0.9}) EXPECT_NEAR(norm(tangent(1.0, c1, t, sc)), 1.0, 1e-8);
}

TEST(Tangent, ImaginaryResidueIsAnError) {
  const SeriesControl sc;
  CoefficientMatrix c = solve_coefficients(1.0, sc);
  c.c[0][0] += Complex(1e-3, 0.0);
  try {
    tangent(1.0, c, 0.3, sc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::numeric_inconsistency);
  }
}

TEST(Tangent, MatchesOracleFrames) {
  for (double tau : {0.5, 1.0, 2.0}) {
    const ClosedFormCurve cf(tau);
    const FrenetOracle o({tau, 0.0, 0.5}, cf.initial_state(), 0.05, 0.95, 1e-10);
    for (int i = 0; i <= 90; i += 5) {
      const double t = std::fmin(0.05 + 0.01 * i, 0.95);
      const FrenetState st = o.state_at(t);
      const TangentJet j = cf.tangent_jet(t);
      EXPECT_LE(max_abs_component(j.d[0] - st.T), 1e-6) << tau << " " << t;
      if (t >= 0.1 && t <= 0.9) {
        const double v = speed_of_t({tau, 0.0, 0.5}, t);
        EXPECT_LE(max_abs_component(j.d[1] - (v / t) * st.N), 1e-5);
      }
    }
  }
}

TEST(GammaU, RoutesAgree) {
  const SeriesControl sc;
  for (double tau : {0.5, 1.0, 2.0})
    for (double t : {0.25, 0.5, 0.75})
      for (int l = 1; l <= 3; ++l) {
        const auto a = compare_U_paths(l, tau, t, sc, SeriesPath::double_sum, SeriesPath::combined_4F3);
        EXPECT_LE(a.difference, 1e-8);
        EXPECT_TRUE(a.agree()) << a.difference << " > " << a.budget;
        const auto b = compare_U_paths(l, tau, t, sc, SeriesPath::termwise_integration, SeriesPath::combined_4F3);
        EXPECT_TRUE(b.agree()) << b.difference << " > " << b.budget;
        EXPECT_NO_THROW(gamma_U_checked(l, tau, t, sc));
      }
}

TEST(GammaU, VanishesAtOrigin) {
  const SeriesControl sc;
  for (int l = 1; l <= 3; ++l) {
    const double a = std::abs(gamma_U(l, 1.0, 1e-4, sc, SeriesPath::combined_4F3).value);
    const double b = std::abs(gamma_U(l, 1.0, 1e-2, sc, SeriesPath::combined_4F3).value);
    EXPECT_LT(a, b);
    EXPECT_LT(a, l == 1 ? 1e-7 : 1e-3);
  }
  EXPECT_EQ(u_leading_power(1, 1.0), Complex(2.0));
  EXPECT_EQ(u_leading_power(2, 1.0), Complex(1.0, -1.0));
}

TEST(GammaU, IncrementsMatchQuadrature) {
  const SeriesControl sc;
  for (double tau : {0.5, 1.0, 2.0})
    for (int l = 1; l <= 3; ++l) {
      const BasisFunction b = basis_S(l, tau);
      const Complex q = integrate(
          [&](double t) { return eval_basis(b, t, sc).value * speed_of_t({tau, 0.0, 0.5}, t); }, 0.4, 0.6);
      for (SeriesPath p : {SeriesPath::double_sum, SeriesPath::combined_4F3, SeriesPath::termwise_integration}) {
        const Complex du = gamma_U(l, tau, 0.6, sc, p).value - gamma_U(l, tau, 0.4, sc, p).value;
        EXPECT_LE(std::abs(du - q), 1e-8) << "tau " << tau << " U" << l << " " << to_string(p);
      }
    }
}

TEST(GammaU, DisplayedCoefficientsMatchSeries) {
  // d_{ln} is the t^(rho+2n) coefficient of S_l / tau.
  for (double tau : {0.5, 1.0, 2.0})
    for (int l = 1; l <= 3; ++l) {
      const BasisFunction b = basis_S(l, tau);
      const auto f = hypergeometric_coefficients(b.f32_spec, 12);
      for (int n = 0; n < 12; ++n)
        EXPECT_LE(rel(std::exp(log_d_coefficient(l, tau, n)), b.prefactor * f[static_cast<std::size_t>(n)] / tau),
                  1e-11);
    }
}

TEST(GammaU, PrintedEFormDoesNotMatch) {
  for (int l = 2; l <= 3; ++l) {
    const Complex good = std::exp(log_e_coefficient(l, 1.0, 1, 2, EForm::corrected));
    const Complex printed = std::exp(log_e_coefficient(l, 1.0, 1, 2, EForm::printed));
    EXPECT_GT(rel(good, printed), 1e-2);
  }
  // U1's e coefficients have no such factor.
  EXPECT_EQ(log_e_coefficient(1, 1.0, 2, 3, EForm::printed), log_e_coefficient(1, 1.0, 2, 3, EForm::corrected));
}

TEST(GammaU, ArgumentChecks) {
  const SeriesControl sc;
  EXPECT_THROW(gamma_U(0, 1.0, 0.5, sc, SeriesPath::combined_4F3), Error);
  EXPECT_THROW(gamma_U(1, 1.0, 1.0, sc, SeriesPath::combined_4F3), Error);
  EXPECT_THROW(gamma_U(1, -1.0, 0.5, sc, SeriesPath::double_sum), Error);
}

TEST(CenterOffset, Properties) {
  const Vec3 c = center_offset(1.0, 0.5, Frame{});
  EXPECT_NEAR(c.x, 0.0, 1e-16);
  EXPECT_NEAR(c.y, -0.5, 1e-16);
  EXPECT_NEAR(c.z, -kSqrt3 / 2.0, 1e-16);
  std::mt19937 rng(3);
  std::normal_distribution<double> g;
  for (int i = 0; i < 10; ++i) {
    const Vec3 a{g(rng), g(rng), g(rng)}, b{g(rng), g(rng), g(rng)};
    Frame f;
    f.T = normalized(a);
    f.N = normalized(b - dot(b, f.T) * f.T);
    f.B = cross(f.T, f.N);
    const Vec3 p = center_offset(1.0, 0.3 + 0.05 * i, f);
    EXPECT_NEAR(norm(p), 1.0, 1e-14);
    EXPECT_NEAR(dot(p, f.T), 0.0, 1e-14);
  }
  EXPECT_THROW(center_offset(1.0, 1.0, Frame{}), Error);
}

TEST(CurvePoint, BasePointAndSphere) {
  const SeriesControl sc;
  const CoefficientMatrix c = solve_coefficients(1.0, sc);
  EXPECT_LE(max_abs_component(curve_point(1.0, c, 0.5, sc) - Vec3{0.0, -0.5, -kSqrt3 / 2.0}), 1e-15);
  for (double t : {0.1, 0.3, 0.7, 0.9}) EXPECT_LE(std::fabs(norm(curve_point(1.0, c, t, sc)) - 1.0), 1e-6);
}

TEST(CurvePoint, PrecomputedCurveAgrees) {
  const SeriesControl sc;
  for (double tau : {0.5, 2.0}) {
    const CoefficientMatrix c = solve_coefficients(tau, sc);
    const ClosedFormCurve cf(tau, sc);
    const ClosedFormCurve tw(tau, sc, SeriesPath::termwise_integration);
    for (double t : {0.1, 0.45, 0.8}) {
      EXPECT_LE(distance(cf.point(t), curve_point(tau, c, t, sc)), 1e-13);
      EXPECT_LE(distance(cf.point(t), tw.point(t)), 1e-12);
    }
  }
  EXPECT_THROW(ClosedFormCurve(1.0, sc, SeriesPath::double_sum), Error);
}

TEST(CurvePoint, MatchesOracle) {
  for (double tau : {0.5, 1.0, 2.0}) {
    const ClosedFormCurve cf(tau);
    const FrenetOracle o({tau, 0.0, 0.5}, cf.initial_state(), 0.05, 0.95, 1e-10);
    double worst = 0.0;
    for (double t : uniform_grid(0.05, 0.95, 181)) worst = std::fmax(worst, distance(cf.point(t), o.state_at(t).point));
    EXPECT_LE(worst, 1e-6) << "tau " << tau;
  }
}

TEST(CurvePoint, IsDeterministic) {
  const ClosedFormCurve a(0.7), b(0.7);
  for (double t : {0.2, 0.6, 0.93}) EXPECT_EQ(a.point(t), b.point(t));
}
