#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace mafl {

using Vec = std::vector<double>;
using Mat = std::vector<std::vector<double>>;
using BMat = std::vector<std::vector<uint8_t>>;

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double sqnorm(const Vec& a) { return dot(a, a); }
inline double norm(const Vec& a) { return std::sqrt(sqnorm(a)); }

// y += c * x
inline void axpy(double c, const Vec& x, Vec& y) {
  for (std::size_t k = 0; k < x.size(); ++k) y[k] += c * x[k];
}

inline Vec sub(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) r[k] = a[k] - b[k];
  return r;
}

inline double max_abs_diff(const Vec& a, const Vec& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

inline bool all_finite(const Vec& a) {
  return std::all_of(a.begin(), a.end(), [](double x) { return std::isfinite(x); });
}

inline Mat make_mat(std::size_t rows, std::size_t cols, double fill = 0.0) {
  return Mat(rows, Vec(cols, fill));
}

inline BMat make_bmat(std::size_t rows, std::size_t cols, uint8_t fill = 0) {
  return BMat(rows, std::vector<uint8_t>(cols, fill));
}

// Relative difference with an absolute floor, used by tolerance checks.
inline double rel_diff(double a, double b, double floor_ = 1e-12) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor_});
}

}  // namespace mafl
