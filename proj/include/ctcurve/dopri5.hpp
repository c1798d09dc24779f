#pragma once

// Dormand-Prince 5(4) with the fourth-order continuous extension.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace ctcurve {

template <std::size_t Dim>
class DormandPrince5 {
 public:
  using State = std::array<double, Dim>;

  struct Options {
    double rtol = 1e-10;
    double atol = 1e-10;
    double scale_floor = 1e-14;
    double min_step_rel = 1e-13;
    long max_steps = 2'000'000;
  };

  /// One accepted step with its interpolation polynomial.
  struct Segment {
    double t_start = 0.0;
    double h = 0.0;
    std::array<State, 5> cont{};

    double t_end() const { return t_start + h; }

    State eval(double t) const {
      const double th = (t - t_start) / h;
      const double th1 = 1.0 - th;
      State y;
      for (std::size_t i = 0; i < Dim; ++i)
        y[i] = cont[0][i] +
               th * (cont[1][i] + th1 * (cont[2][i] + th * (cont[3][i] + th1 * cont[4][i])));
      return y;
    }
  };

  struct Result {
    std::vector<Segment> segments;  // ordered in the direction of integration
    double t_reached = 0.0;
    State y_reached{};
    bool complete = false;
    std::string failure;  // empty when complete
    long rejected = 0;
  };

  template <class Rhs>
  static Result integrate(Rhs&& f, double t0, const State& y0, double t_end, const Options& opt) {
    Result res;
    res.t_reached = t0;
    res.y_reached = y0;
    if (t_end == t0) {
      res.complete = true;
      return res;
    }
    const double dir = t_end > t0 ? 1.0 : -1.0;

    double t = t0;
    State y = y0;
    State k1 = f(t, y);
    double h = dir * initial_step(f, t, y, k1, opt, dir, std::fabs(t_end - t0));
    bool last_rejected = false;

    State k2, k3, k4, k5, k6, k7, ytmp, ynew;
    for (long step = 0;; ++step) {
      if (dir * (t_end - t) <= 0.0) break;
      if (step >= opt.max_steps) {
        res.failure = "maximum number of steps reached";
        break;
      }
      if (dir * (t + h - t_end) > 0.0) h = t_end - t;
      if (std::fabs(h) < opt.min_step_rel * std::max(1.0, std::fabs(t))) {
        res.failure = "step size underflow";
        break;
      }

      for (std::size_t i = 0; i < Dim; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
      k2 = f(t + c2 * h, ytmp);
      for (std::size_t i = 0; i < Dim; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
      k3 = f(t + c3 * h, ytmp);
      for (std::size_t i = 0; i < Dim; ++i) ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
      k4 = f(t + c4 * h, ytmp);
      for (std::size_t i = 0; i < Dim; ++i)
        ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
      k5 = f(t + c5 * h, ytmp);
      for (std::size_t i = 0; i < Dim; ++i)
        ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
      const double t_new = t + h;
      k6 = f(t_new, ytmp);
      for (std::size_t i = 0; i < Dim; ++i)
        ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
      k7 = f(t_new, ynew);

      double err = 0.0;
      for (std::size_t i = 0; i < Dim; ++i) {
        const double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        const double sc = std::max(opt.atol + opt.rtol * std::max(std::fabs(y[i]), std::fabs(ynew[i])),
                                   opt.scale_floor);
        err += (ei / sc) * (ei / sc);
      }
      err = std::sqrt(err / static_cast<double>(Dim));

      if (err <= 1.0) {
        Segment seg;
        seg.t_start = t;
        seg.h = h;
        for (std::size_t i = 0; i < Dim; ++i) {
          const double diff = ynew[i] - y[i];
          const double bspl = h * k1[i] - diff;
          seg.cont[0][i] = y[i];
          seg.cont[1][i] = diff;
          seg.cont[2][i] = bspl;
          seg.cont[3][i] = diff - h * k7[i] - bspl;
          seg.cont[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
        }
        res.segments.push_back(seg);
        t = t_new;
        y = ynew;
        k1 = k7;
        double fac = err == 0.0 ? facmax : std::clamp(safety * std::pow(err, -0.2), facmin, facmax);
        if (last_rejected) fac = std::min(fac, 1.0);
        h *= fac;
        last_rejected = false;
      } else {
        ++res.rejected;
        h *= std::max(facmin, safety * std::pow(err, -0.2));
        last_rejected = true;
      }
    }
    res.t_reached = t;
    res.y_reached = y;
    res.complete = res.failure.empty();
    return res;
  }

 private:
  static constexpr double safety = 0.9, facmin = 0.2, facmax = 10.0;

  static constexpr double c2 = 0.2, c3 = 0.3, c4 = 0.8, c5 = 8.0 / 9.0;
  static constexpr double a21 = 0.2;
  static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
  static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
  static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                          a54 = -212.0 / 729.0;
  static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                          a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
  static constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                          a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
  static constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                          e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
  static constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                          d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                          d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

  // Hairer-Wanner starting step heuristic.
  template <class Rhs>
  static double initial_step(Rhs& f, double t, const State& y, const State& k1, const Options& opt,
                             double dir, double span) {
    double dnf = 0.0, dny = 0.0;
    for (std::size_t i = 0; i < Dim; ++i) {
      const double sc = std::max(opt.atol + opt.rtol * std::fabs(y[i]), opt.scale_floor);
      dnf += (k1[i] / sc) * (k1[i] / sc);
      dny += (y[i] / sc) * (y[i] / sc);
    }
    double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : std::sqrt(dny / dnf) * 0.01;
    h = std::min(h, span);
    State y1;
    for (std::size_t i = 0; i < Dim; ++i) y1[i] = y[i] + dir * h * k1[i];
    const State k2 = f(t + dir * h, y1);
    double der2 = 0.0;
    for (std::size_t i = 0; i < Dim; ++i) {
      const double sc = std::max(opt.atol + opt.rtol * std::fabs(y[i]), opt.scale_floor);
      der2 += ((k2[i] - k1[i]) / sc) * ((k2[i] - k1[i]) / sc);
    }
    der2 = std::sqrt(der2) / h;
    const double der12 = std::max(std::fabs(der2), std::sqrt(dnf));
    const double h1 = der12 <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der12, 0.2);
    return std::min({100.0 * h, h1, span});
  }
};

}  // namespace ctcurve
