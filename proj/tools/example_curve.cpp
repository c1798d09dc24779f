// Minimal library use: build the closed-form curve for one torsion, walk it,
// and check it against the integrated Frenet system.

#include <cstdio>

#include "ctcurve/ctcurve.hpp"

int main() {
  using namespace ctcurve;
  const double tau = 1.0;
  const ClosedFormCurve curve(tau);
  const FrenetOracle oracle({tau, 0.0, 0.5}, curve.initial_state(), 0.05, 0.95, 1e-10);

  std::printf("%6s %22s %22s %22s %10s\n", "t", "x", "y", "z", "|cf-ode|");
  for (double t : uniform_grid(0.05, 0.95, 10)) {
    const Vec3 p = curve.point(t);
    std::printf("%6.3f %22.15f %22.15f %22.15f %10.2e\n", t, p.x, p.y, p.z,
                distance(p, oracle.state_at(t).point));
  }
  std::printf("condition of the initial-value system: %.3g\n", curve.coefficients().condition);
}
