#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace coordtune {

/// Adaptive 7/15-point Gauss-Kronrod integration of f over [a, b]. Intervals
/// are bisected until the Kronrod/Gauss difference is below
/// max(abs_tol, rel_tol * |estimate|) or `max_depth` is reached.
template <typename F>
double integrate(F&& f, double a, double b, double abs_tol = 1e-13, double rel_tol = 1e-12, int max_depth = 40) {
  static constexpr std::array<double, 8> xk = {
      0.991455371120812639206854697526329, 0.949107912342758524526189684047851, 0.864864423359769072789712788640926,
      0.741531185599394439863864773280788, 0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
      0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
  static constexpr std::array<double, 8> wk = {
      0.022935322010529224963732008058970, 0.063092092629978553290700663189204, 0.104790010322250183839876322541518,
      0.140653259715525918745189590510238, 0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
      0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr std::array<double, 4> wg = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                               0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

  struct Rule {
    double kronrod;
    double error;
  };
  auto rule = [&](double lo, double hi) {
    const double center = 0.5 * (lo + hi);
    const double half = 0.5 * (hi - lo);
    const double fc = f(center);
    double k = wk[7] * fc;
    double g = wg[3] * fc;
    for (int j = 0; j < 7; ++j) {
      const double dx = half * xk[static_cast<std::size_t>(j)];
      const double s = f(center - dx) + f(center + dx);
      k += wk[static_cast<std::size_t>(j)] * s;
      if (j % 2 == 1) g += wg[static_cast<std::size_t>(j / 2)] * s;
    }
    return Rule{k * half, std::abs((k - g) * half)};
  };

  auto recurse = [&](auto&& self, double lo, double hi, const Rule& whole, int depth) -> double {
    const double tol = std::max(abs_tol, rel_tol * std::abs(whole.kronrod));
    if (whole.error <= tol || depth >= max_depth) return whole.kronrod;
    const double mid = 0.5 * (lo + hi);
    const Rule left = rule(lo, mid);
    const Rule right = rule(mid, hi);
    return self(self, lo, mid, left, depth + 1) + self(self, mid, hi, right, depth + 1);
  };

  if (!(std::isfinite(a) && std::isfinite(b))) throw std::invalid_argument("integrate: bounds must be finite");
  if (a == b) return 0.0;
  if (a > b) return -integrate(f, b, a, abs_tol, rel_tol, max_depth);
  return recurse(recurse, a, b, rule(a, b), 0);
}

}  // namespace coordtune
