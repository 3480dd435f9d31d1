#pragma once

#include <cmath>
#include <numbers>

#include "dfd/core/require.hpp"
#include "dfd/frame.hpp"

namespace dfd {

/// Discrete 2D Radon transform on n x n images (flattened row-major), sampled
/// at n_angles uniform angles in [0, pi) and unit-spaced detector offsets.
/// Rays are driven through the image with linear interpolation between the two
/// pixels straddling each crossing; the adjoint enumerates the identical
/// weights, so it is the exact transpose of the forward map.
struct RadonOperator {
  int n = 0;
  int n_angles = 0;
  int n_det = 0;

  int rows() const { return n_angles * n_det; }
  int cols() const { return n * n; }

  /// Enumerates (pixel index, weight) pairs of one ray.
  template <class F>
  void for_each_weight(int angle_index, int det_index, F&& f) const {
    const double theta = std::numbers::pi * angle_index / n_angles;
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    const double t = det_index - (n_det - 1) / 2.0;
    const double half = (n - 1) / 2.0;
    if (std::abs(ct) >= std::abs(st)) {
      // ray crosses every pixel row once: x = (t - y sin) / cos
      const double inv = 1.0 / std::abs(ct);
      for (int row = 0; row < n; ++row) {
        const double y = row - half;
        const double c = (t - y * st) / ct + half;  // continuous column coord
        const int c0 = static_cast<int>(std::floor(c));
        const double frac = c - c0;
        if (c0 >= 0 && c0 < n && frac < 1.0) f(row * n + c0, (1.0 - frac) * inv);
        if (c0 + 1 >= 0 && c0 + 1 < n && frac > 0.0) f(row * n + c0 + 1, frac * inv);
      }
    } else {
      // ray crosses every pixel column once: y = (t - x cos) / sin
      const double inv = 1.0 / std::abs(st);
      for (int col = 0; col < n; ++col) {
        const double x = col - half;
        const double r = (t - x * ct) / st + half;  // continuous row coord
        const int r0 = static_cast<int>(std::floor(r));
        const double frac = r - r0;
        if (r0 >= 0 && r0 < n && frac < 1.0) f(r0 * n + col, (1.0 - frac) * inv);
        if (r0 + 1 >= 0 && r0 + 1 < n && frac > 0.0) f((r0 + 1) * n + col, frac * inv);
      }
    }
  }

  Vec apply(const Vec& image) const {
    DFD_REQUIRE(static_cast<int>(image.size()) == cols(), "radon apply: expected dim ",
                cols(), ", got ", image.size());
    Vec sino = Vec::Zero(rows());
    for (int a = 0; a < n_angles; ++a) {
      for (int d = 0; d < n_det; ++d) {
        double acc = 0.0;
        for_each_weight(a, d, [&](int p, double w) { acc += w * image(p); });
        sino(a * n_det + d) = acc;
      }
    }
    return sino;
  }

  Vec adjoint(const Vec& sino) const {
    DFD_REQUIRE(static_cast<int>(sino.size()) == rows(), "radon adjoint: expected dim ",
                rows(), ", got ", sino.size());
    Vec image = Vec::Zero(cols());
    for (int a = 0; a < n_angles; ++a) {
      for (int d = 0; d < n_det; ++d) {
        const double s = sino(a * n_det + d);
        if (s == 0.0) continue;
        for_each_weight(a, d, [&](int p, double w) { image(p) += w * s; });
      }
    }
    return image;
  }

  /// Matrix-free wrapper sharing this geometry by value.
  LinearOperator linear_operator() const {
    LinearOperator op;
    op.rows = rows();
    op.cols = cols();
    const RadonOperator self = *this;
    op.apply_fn = [self](const Vec& x) { return self.apply(x); };
    op.adjoint_fn = [self](const Vec& y) { return self.adjoint(y); };
    return op;
  }
};

inline RadonOperator make_radon_operator(int n, int n_angles) {
  DFD_REQUIRE(n >= 2 && (n & (n - 1)) == 0, "radon: image side must be a power of two");
  DFD_REQUIRE(n_angles >= 1, "radon: need at least one angle");
  RadonOperator r;
  r.n = n;
  r.n_angles = n_angles;
  // detector line covers the image diagonal; odd count centers a bin at t = 0
  int n_det = static_cast<int>(std::ceil(std::sqrt(2.0) * n));
  if (n_det % 2 == 0) ++n_det;
  r.n_det = n_det;
  return r;
}

}  // namespace dfd
