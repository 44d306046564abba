#pragma once

// Test-only reference computations. Nothing here calls into the series or
// time-integration code it is used to check.

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

inline double simpson(const std::function<double(double)>& f, double a,
                      double b, double fa, double fm, double fb, double whole,
                      double eps, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6 * (fa + 4 * flm + fm);
  const double right = (b - m) / 6 * (fm + 4 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15 * eps)
    return left + right + (left + right - whole) / 15;
  return simpson(f, a, m, fa, flm, fm, left, eps / 2, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, eps / 2, depth - 1);
}

/// Adaptive Simpson quadrature.
inline double integrate(const std::function<double(double)>& f, double a,
                        double b, double eps = 1e-12) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6 * (fa + 4 * fm + fb);
  return simpson(f, a, b, fa, fm, fb, whole, eps, 40);
}

/// Backward RK4 integration of the fixed-point equation
///   p'(w) = -k w p(w) + 4 k w p(2w) [w < W/2]
/// from p(W) = k W (unit mass at W), with the upward jump of +k W across W/2.
/// Grid spacing W / 2^bits so that 2w of every node and half-node is a node.
struct OdeFixedPoint {
  double k, w_max, h;
  std::vector<double> p;  // p[j] ~ density at j*h (upper-side value at W/2)

  OdeFixedPoint(double k_, double w_max_, int bits = 16)
      : k(k_), w_max(w_max_) {
    const std::size_t n = std::size_t{1} << bits;
    h = w_max / static_cast<double>(n);
    p.assign(n + 1, 0.0);
    // Half-grid for RK4 midpoints: q[2j] = p[j], q[2j+1] = p at (j+1/2)h.
    std::vector<double> q(2 * n + 1, 0.0);
    q[2 * n] = p[n] = k * w_max;
    const std::size_t half = n / 2;
    for (std::size_t j = n; j > 0; --j) {
      const double w = static_cast<double>(j) * h;
      // p(2w); at 2w = W/2 the side of the jump depends on the direction
      // the evaluation point is approached from within the step.
      auto src = [&](std::size_t qi, bool from_above) -> double {
        const std::size_t target = 2 * qi;
        if (target > 2 * n) return 0.0;
        if (target == n && from_above) return q[target] + k * w_max;
        return q[target];
      };
      auto rhs = [&](double ww, double pv, std::size_t qi, bool below_half,
                     bool from_above) {
        double r = -k * ww * pv;
        if (below_half) r += 4 * k * ww * src(qi, from_above);
        return r;
      };
      const bool below = j <= half;  // step [w-h, w] lies at or below W/2
      const double y = q[2 * j];
      const double k1 = rhs(w, y, 2 * j, below, false);
      const double k2 = rhs(w - h / 2, y - h / 2 * k1, 2 * j - 1, below, false);
      const double k3 = rhs(w - h / 2, y - h / 2 * k2, 2 * j - 1, below, false);
      const double k4 = rhs(w - h, y - h * k3, 2 * j - 2, below, true);
      const double next = y - h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
      // Cubic Hermite midpoint for later p(2w) lookups.
      q[2 * j - 1] = 0.5 * (y + next) + h / 8 * (rhs(w - h, next, 2 * j - 2, below, true) - k1);
      q[2 * j - 2] = next;
      p[j - 1] = next;
      if (j - 1 == half) {
        // Crossing W/2 downwards removes the Dirac contribution.
        q[2 * (j - 1)] -= k * w_max;
      }
    }
  }

  /// Trapezoid integral of the unit-mass density over (0, W].
  double integral() const {
    double s = 0;
    const std::size_t half = (p.size() - 1) / 2;
    for (std::size_t j = 0; j + 1 < p.size(); ++j) {
      const double lo = p[j];  // upper-side value at W/2
      double hi = p[j + 1];
      if (j + 1 == half) hi = p[j + 1] - k * w_max;  // lower-side limit
      s += 0.5 * h * (lo + hi);
    }
    return s;
  }

  /// Mean window of the normalized distribution (atom included).
  double mean() const {
    double s = 0;
    const std::size_t half = (p.size() - 1) / 2;
    for (std::size_t j = 0; j + 1 < p.size(); ++j) {
      const double lo = p[j] * h * j;
      double hi = p[j + 1];
      if (j + 1 == half) hi = p[j + 1] - k * w_max;
      hi *= h * (j + 1);
      s += 0.5 * h * (lo + hi);
    }
    return (s + w_max) / (1 + integral());
  }

  double at(double w) const {
    const double x = w / h;
    const auto j = static_cast<std::size_t>(x);
    if (j + 1 >= p.size()) return p.back();
    const double t = x - static_cast<double>(j);
    return (1 - t) * p[j] + t * p[j + 1];
  }
};

/// Total variation distance between two discrete distributions.
inline double total_variation(const std::vector<double>& a,
                              const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

}  // namespace oracle
