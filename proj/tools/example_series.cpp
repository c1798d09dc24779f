// The hypergeometric building blocks on their own.

#include <cstdio>

#include "ctcurve/ctcurve.hpp"

int main() {
  using namespace ctcurve;
  const SeriesControl control;

  HypergeometricSpec f21{{1.0, 1.0}, {2.0}, 0.5};
  const SeriesValue v = hyp_pFq(f21, control);
  std::printf("2F1(1,1;2;1/2) = %.17g  (err %.1e, %d terms)\n", v.value.real(), v.error_estimate, v.terms);

  for (int l = 1; l <= 3; ++l) {
    const BasisJet j = eval_basis(basis_S(l, 1.0), 0.5, control);
    std::printf("S%d(1/2) = %+.15f %+.15fi\n", l, j.value.real(), j.value.imag());
  }
  for (int l = 1; l <= 3; ++l) {
    const auto pc = compare_U_paths(l, 1.0, 0.5, control, SeriesPath::double_sum, SeriesPath::combined_4F3);
    std::printf("U%d(1/2): double sum vs 4F3 differ by %.2e (budget %.2e)\n", l, pc.difference, pc.budget);
  }
}
