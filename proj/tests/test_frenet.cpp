#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ctcurve/closedform.hpp"
#include "ctcurve/dopri5.hpp"
#include "ctcurve/frenet.hpp"
#include "ctcurve/oracle.hpp"
#include "ctcurve/validate.hpp"

using namespace ctcurve;

namespace {

constexpr double kPi = std::numbers::pi;

FrenetState centered_start(double tau) {
  (void)tau;
  return {center_offset(tau, 0.5, Frame{}), {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
}

Frame random_frame(std::mt19937& rng) {
  std::normal_distribution<double> g;
  const Vec3 a{g(rng), g(rng), g(rng)}, b{g(rng), g(rng), g(rng)};
  Frame f;
  f.T = normalized(a);
  f.N = normalized(b - dot(b, f.T) * f.T);
  f.B = cross(f.T, f.N);
  return f;
}

}  // namespace

TEST(Apparatus, UnitHelix) {
  const Apparatus a = frenet_apparatus({0, 1, 1}, {-1, 0, 0}, {0, -1, 0});
  EXPECT_NEAR(a.v, std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(a.kappa, 0.5, 1e-15);
  EXPECT_NEAR(a.tau, 0.5, 1e-15);
}

TEST(Apparatus, PlanarCircle) {
  // radius 2 at angle 0, unit angular speed
  const Apparatus a = frenet_apparatus({0, 2, 0}, {-2, 0, 0}, {0, -2, 0});
  EXPECT_NEAR(a.kappa, 0.5, 1e-15);
  EXPECT_EQ(a.tau, 0.0);
}

TEST(Apparatus, Degenerate) {
  EXPECT_THROW(frenet_apparatus({0, 0, 0}, {1, 0, 0}, {0, 1, 0}), Error);
  try {
    frenet_apparatus({1, 0, 0}, {2, 0, 0}, {0, 1, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::degenerate_curve);
  }
}

TEST(Parametrization, KappaOfS) {
  EXPECT_NEAR(kappa_of_s({1.0, 0.0, 0.5}, kPi / 2), 1.0, 1e-15);
  EXPECT_NEAR(kappa_of_s({1.0, 0.0, 0.5}, kPi / 6), 2.0, 1e-14);
  EXPECT_NEAR(kappa_of_s({2.0, 0.0, 0.5}, kPi / 4), 1.0, 1e-15);
  EXPECT_THROW(kappa_of_s({1.0, 0.0, 0.5}, 0.0), Error);
  EXPECT_THROW(kappa_of_s({1.0, 0.0, 0.5}, kPi), Error);
}

TEST(Parametrization, RoundTrip) {
  for (const CurveParams p : {CurveParams{1.0, 0.0, 0.5}, CurveParams{2.0, 0.3, 0.5}, CurveParams{0.1, -0.2, 0.5}})
    for (double t : {0.1, 0.5, 0.9}) {
      EXPECT_NEAR(t_of_s(p, s_of_t(p, t)), t, 1e-12);
      EXPECT_NEAR(kappa_of_s(p, s_of_t(p, t)), 1.0 / t, 1e-12 / t);
    }
  EXPECT_NEAR(s_of_t({1.0, 0.0, 0.5}, 0.5), kPi / 6, 1e-15);
  EXPECT_NEAR(s_of_t({2.0, 0.3, 0.5}, 0.5), (kPi / 6 - 0.3) / 2, 1e-15);
  EXPECT_THROW(s_of_t({1.0, 0.0, 0.5}, 1.0), Error);
  EXPECT_THROW(t_of_s({1.0, 0.0, 0.5}, kPi / 2 + 0.1), Error);
}

TEST(Parametrization, Speed) {
  EXPECT_NEAR(speed_of_t({1.0, 0.0, 0.5}, 0.5), 2.0 / std::sqrt(3.0), 1e-15);
  EXPECT_NEAR(speed_of_t({2.0, 0.0, 0.5}, 0.0), 0.5, 1e-15);
  EXPECT_THROW(speed_of_t({1.0, 0.0, 0.5}, 1.0), Error);
}

TEST(CurveParams, Validation) {
  EXPECT_THROW((CurveParams{0.0, 0.0, 0.5}.validate()), Error);
  EXPECT_THROW((CurveParams{1.0, 0.0, 1.0}.validate()), Error);
  EXPECT_NO_THROW((CurveParams{}.validate()));
}

TEST(OdeRhs, InitialFrame) {
  const FrenetState d = ode_rhs({1.0, 0.0, 0.5}, 0.5, FrenetState{});
  EXPECT_NEAR(d.T.y, 4.0 / std::sqrt(3.0), 1e-14);
  EXPECT_EQ(d.T.x, 0.0);
  EXPECT_EQ(d.T.z, 0.0);
  EXPECT_NEAR(norm(d.point), speed_of_t({1.0, 0.0, 0.5}, 0.5), 1e-15);
}

TEST(OdeRhs, BinormalDerivativeAlongNormal) {
  std::mt19937 rng(7);
  for (int i = 0; i < 10; ++i) {
    const Frame f = random_frame(rng);
    const FrenetState d = ode_rhs({1.3, 0.0, 0.5}, 0.4, {{}, f.T, f.N, f.B});
    EXPECT_NEAR(dot(d.B, f.T), 0.0, 1e-15);
    EXPECT_NEAR(dot(d.B, f.B), 0.0, 1e-15);
  }
  EXPECT_THROW(ode_rhs({1.0, 0.0, 0.5}, 0.0, FrenetState{}), Error);
}

TEST(SphereCondition, Examples) {
  const CurveParams p{1.3, 0.2, 0.5};
  for (double s : {0.3, 0.7, 1.0}) {
    const double k = kappa_of_s(p, s);
    const double x = p.tau * s + p.phase_C;
    const double kp = -p.tau * k * std::cos(x) / std::sin(x);
    EXPECT_NEAR(sphere_condition_residual(k, kp, p.tau, 1.0, 1.0), 0.0, 1e-10);
  }
  EXPECT_EQ(sphere_condition_residual(1.0, 0.0, 0.0, 1.0, 1.0), 0.0);
  EXPECT_NEAR(sphere_condition_residual(0.5, 0.0, 0.5, std::sqrt(2.0), 1.0), -3.0 / 64.0, 1e-16);
}

TEST(Dopri5, ExponentialAndOscillator) {
  using S1 = DormandPrince5<1>;
  S1::Options o;
  o.rtol = o.atol = 1e-12;
  const auto r = S1::integrate([](double, const S1::State& y) { return S1::State{y[0]}; }, 0.0, {1.0}, 2.0, o);
  ASSERT_TRUE(r.complete);
  EXPECT_NEAR(r.y_reached[0], std::exp(2.0), 1e-10);
  for (const auto& seg : r.segments) {
    const double tm = seg.t_start + 0.37 * seg.h;
    EXPECT_NEAR(seg.eval(tm)[0], std::exp(tm), 1e-9);
  }

  using S2 = DormandPrince5<2>;
  S2::Options o2;
  o2.rtol = o2.atol = 1e-11;
  const auto back = S2::integrate([](double, const S2::State& y) { return S2::State{y[1], -y[0]}; }, 1.0,
                                  {std::sin(1.0), std::cos(1.0)}, -2.0, o2);
  ASSERT_TRUE(back.complete);
  EXPECT_NEAR(back.y_reached[0], std::sin(-2.0), 1e-9);
  EXPECT_LT(back.segments.back().h, 0.0);
}

TEST(Dopri5, StepLimitIsReported) {
  using S1 = DormandPrince5<1>;
  S1::Options o;
  o.max_steps = 3;
  const auto r = S1::integrate([](double, const S1::State& y) { return S1::State{y[0]}; }, 0.0, {1.0}, 10.0, o);
  EXPECT_FALSE(r.complete);
  EXPECT_FALSE(r.failure.empty());
  EXPECT_LT(r.t_reached, 10.0);
}

TEST(Oracle, ExactAtInitialPoint) {
  const FrenetState init = centered_start(1.0);
  const FrenetOracle o({1.0, 0.0, 0.5}, init, 0.05, 0.95, 1e-10);
  const FrenetState s = o.state_at(0.5);
  EXPECT_EQ(s.point, init.point);
  EXPECT_EQ(s.T, init.T);
  EXPECT_EQ(s.B, init.B);
}

TEST(Oracle, StaysOnSphere) {
  for (double tau : {0.1, 0.5, 1.0, 2.0}) {
    const FrenetOracle o({tau, 0.0, 0.5}, centered_start(tau), 0.05, 0.95, 1e-10);
    ASSERT_FALSE(o.truncation().has_value());
    for (double t : uniform_grid(0.05, 0.95, 181)) EXPECT_LE(std::fabs(norm(o.state_at(t).point) - 1.0), 1e-8) << t;
  }
}

TEST(Oracle, FrameStaysOrthonormal) {
  std::mt19937 rng(99);
  for (double tau : {0.1, 0.5, 1.0, 2.0}) {
    const Frame f = random_frame(rng);
    const FrenetOracle o({tau, 0.0, 0.5}, {{0, 0, 0}, f.T, f.N, f.B}, 0.05, 0.95, 1e-10);
    double worst = 0.0;
    for (double t : uniform_grid(0.05, 0.95, 91)) worst = std::fmax(worst, o.state_at(t).frame().orthonormality_defect());
    EXPECT_LE(worst, 1e-8) << "tau " << tau;
  }
}

TEST(Oracle, ConvergesWithTolerance) {
  const FrenetOracle coarse({1.0, 0.0, 0.5}, centered_start(1.0), 0.05, 0.95, 1e-8);
  const FrenetOracle fine({1.0, 0.0, 0.5}, centered_start(1.0), 0.05, 0.95, 1e-12);
  double d = 0.0;
  for (double t : uniform_grid(0.05, 0.95, 37)) d = std::fmax(d, distance(coarse.state_at(t).point, fine.state_at(t).point));
  EXPECT_LT(d, 1e-5);
  EXPECT_GT(fine.steps(), coarse.steps());
}

TEST(Oracle, TruncationIsReported) {
  const FrenetOracle o({1.0, 0.0, 0.5}, centered_start(1.0), 1e-12, 0.95, 1e-10);
  ASSERT_TRUE(o.truncation().has_value());
  EXPECT_GT(o.achieved_lo(), 1e-12);
  EXPECT_EQ(o.achieved_hi(), 0.95);
  EXPECT_NE(o.truncation()->reason.find("lower"), std::string::npos);
  const std::vector<double> ts{1e-12, 0.5, 0.9};
  const SampledCurve c = o.sample(ts);
  EXPECT_EQ(c.samples.size(), 2u);
  EXPECT_TRUE(c.truncation.has_value());
  EXPECT_THROW(o.state_at(1e-12), Error);

  const FrenetOracle limited({1.0, 0.0, 0.5}, centered_start(1.0), 0.05, 0.95, 1e-10, 4);
  ASSERT_TRUE(limited.truncation().has_value());
  EXPECT_LT(limited.achieved_hi(), 0.95);
}

TEST(Oracle, RejectsBadInput) {
  Frame bad;
  bad.N = {0.0, 2.0, 0.0};
  EXPECT_THROW(FrenetOracle({1.0, 0.0, 0.5}, {{}, bad.T, bad.N, bad.B}, 0.1, 0.9, 1e-10), Error);
  EXPECT_THROW(FrenetOracle({1.0, 0.0, 0.5}, FrenetState{}, 0.0, 0.9, 1e-10), Error);
  EXPECT_THROW(FrenetOracle({1.0, 0.0, 0.5}, FrenetState{}, 0.1, 0.9, 0.0), Error);
}

TEST(Oracle, FiniteDifferenceApparatus) {
  const CurveParams p{1.0, 0.0, 0.5};
  const FrenetOracle o(p, centered_start(1.0), 0.05, 0.95, 1e-13);
  const auto point = [&](double t) { return o.state_at(t).point; };
  for (double t : {0.3, 0.5, 0.7}) {
    const Apparatus a = estimate_apparatus(p, point, t);
    EXPECT_NEAR(a.tau, 1.0, 1e-4) << t;
    EXPECT_NEAR(a.kappa * t, 1.0, 1e-4) << t;
    EXPECT_NEAR(a.v, 1.0, 1e-6);
  }
}

TEST(SampledCurve, ChordMatchesArcLength) {
  const SampledCurve c = ClosedFormCurve(1.0).sample(uniform_grid(0.05, 0.95, 181));
  EXPECT_LE(c.chord_defect(), 1e-3);
  for (std::size_t i = 1; i < c.samples.size(); ++i) {
    EXPECT_GT(c.samples[i].t, c.samples[i - 1].t);
    EXPECT_GT(c.samples[i].s, c.samples[i - 1].s);
  }
}

TEST(Homothety, ScalesEverything) {
  const SampledCurve c = ClosedFormCurve(1.0).sample(uniform_grid(0.1, 0.9, 41));
  const SampledCurve same = homothety(c, 1.0);
  for (std::size_t i = 0; i < c.samples.size(); ++i) EXPECT_EQ(same.samples[i].point, c.samples[i].point);

  const SampledCurve big = homothety(c, 2.0);
  EXPECT_EQ(big.params.tau, 0.5);
  EXPECT_NEAR(big.max_radius(), 2.0 * c.max_radius(), 1e-12);
  for (std::size_t i = 0; i < c.samples.size(); ++i) {
    EXPECT_LE(max_abs_component(big.samples[i].point / 2.0 - c.samples[i].point), 1e-12);
    EXPECT_NEAR(big.samples[i].s, 2.0 * c.samples[i].s, 1e-12);
  }
  EXPECT_THROW(homothety(c, 0.0), Error);
}

TEST(Homothety, TorsionScalesInversely) {
  const double lambda = 2.0;
  const ClosedFormCurve cf(1.0);
  const CurveParams scaled{1.0 / lambda, 0.0, 0.5};
  // The scaled curve as a function of its own t: arc length s' = lambda s.
  const auto point = [&](double t) { return lambda * cf.point(t); };
  for (double t : {0.3, 0.6}) {
    const Apparatus a = estimate_apparatus(scaled, point, t);
    EXPECT_NEAR(a.tau, 0.5, 1e-4);
    EXPECT_NEAR(a.kappa, 1.0 / (lambda * t), 1e-4);
  }
}
