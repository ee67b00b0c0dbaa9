#pragma once

#include <cmath>
#include <functional>

#include "mafl/common.hpp"

namespace mafl {

// Forward-mode dual number: carries one directional derivative alongside the
// value. Expressions templated on the scalar type evaluate either plain
// doubles or Duals; seeding one coordinate at a time yields the gradient.
struct Dual {
  double v = 0.0;
  double d = 0.0;

  Dual() = default;
  Dual(double value) : v(value), d(0.0) {}  // NOLINT: implicit by design
  Dual(double value, double deriv) : v(value), d(deriv) {}
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator-(Dual a) { return {-a.v, -a.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator/(Dual a, Dual b) {
  const double inv = 1.0 / b.v;
  const double q = a.v * inv;
  return {q, (a.d - q * b.d) * inv};
}
inline Dual& operator+=(Dual& a, Dual b) { a = a + b; return a; }
inline Dual& operator-=(Dual& a, Dual b) { a = a - b; return a; }
inline Dual& operator*=(Dual& a, Dual b) { a = a * b; return a; }

inline bool operator<(Dual a, Dual b) { return a.v < b.v; }
inline bool operator>(Dual a, Dual b) { return a.v > b.v; }

inline Dual sqrt(Dual a) {
  const double s = std::sqrt(a.v);
  return {s, s > 0.0 ? a.d / (2.0 * s) : 0.0};
}
inline Dual log(Dual a) { return {std::log(a.v), a.d / a.v}; }
inline Dual exp(Dual a) {
  const double e = std::exp(a.v);
  return {e, e * a.d};
}

inline double value_of(double x) { return x; }
inline double value_of(Dual x) { return x.v; }

// Gradient of f : R^n -> scalar via one forward sweep per coordinate.
inline Vec forward_gradient(const std::function<Dual(const std::vector<Dual>&)>& f, const Vec& x) {
  std::vector<Dual> xs(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) xs[k] = Dual(x[k]);
  Vec g(x.size(), 0.0);
  for (std::size_t k = 0; k < x.size(); ++k) {
    xs[k].d = 1.0;
    g[k] = f(xs).d;
    xs[k].d = 0.0;
  }
  return g;
}

// Central finite differences; the independent oracle for gradient checks.
inline Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-6) {
  Vec g(x.size(), 0.0);
  Vec xp = x;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double step = h * std::max(1.0, std::abs(x[k]));
    xp[k] = x[k] + step;
    const double fp = f(xp);
    xp[k] = x[k] - step;
    const double fm = f(xp);
    xp[k] = x[k];
    g[k] = (fp - fm) / (2.0 * step);
  }
  return g;
}

}  // namespace mafl
