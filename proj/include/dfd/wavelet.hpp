#pragma once

#include <cmath>
#include <vector>

#include "dfd/core/require.hpp"
#include "dfd/frame.hpp"

namespace dfd {

namespace detail {

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// One orthonormal Haar analysis step on the leading m x m block:
/// averages/differences along rows, then along columns, leaving the usual
/// four-quadrant layout (approximation in the top-left).
inline void haar_step_forward(Mat& a, int m) {
  const double r = 1.0 / std::sqrt(2.0);
  const int h = m / 2;
  Eigen::VectorXd tmp(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < h; ++j) {
      tmp(j) = (a(i, 2 * j) + a(i, 2 * j + 1)) * r;
      tmp(h + j) = (a(i, 2 * j) - a(i, 2 * j + 1)) * r;
    }
    for (int j = 0; j < m; ++j) a(i, j) = tmp(j);
  }
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < h; ++i) {
      tmp(i) = (a(2 * i, j) + a(2 * i + 1, j)) * r;
      tmp(h + i) = (a(2 * i, j) - a(2 * i + 1, j)) * r;
    }
    for (int i = 0; i < m; ++i) a(i, j) = tmp(i);
  }
}

/// Exact inverse of haar_step_forward.
inline void haar_step_inverse(Mat& a, int m) {
  const double r = 1.0 / std::sqrt(2.0);
  const int h = m / 2;
  Eigen::VectorXd tmp(m);
  for (int j = 0; j < m; ++j) {
    for (int i = 0; i < h; ++i) {
      tmp(2 * i) = (a(i, j) + a(h + i, j)) * r;
      tmp(2 * i + 1) = (a(i, j) - a(h + i, j)) * r;
    }
    for (int i = 0; i < m; ++i) a(i, j) = tmp(i);
  }
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < h; ++j) {
      tmp(2 * j) = (a(i, j) + a(i, h + j)) * r;
      tmp(2 * j + 1) = (a(i, j) - a(i, h + j)) * r;
    }
    for (int j = 0; j < m; ++j) a(i, j) = tmp(j);
  }
}

}  // namespace detail

/// Multi-level orthonormal 2D Haar analysis. The result uses the nested
/// quadrant layout; step 1 (finest details) fills the three outer quadrants,
/// deeper steps recurse on the approximation block.
inline Mat dwt2(Mat image, int levels) {
  const int n = static_cast<int>(image.rows());
  DFD_REQUIRE(image.cols() == n, "dwt2: image must be square");
  DFD_REQUIRE(detail::is_power_of_two(n), "dwt2: side must be a power of two");
  DFD_REQUIRE(levels >= 1 && (1 << levels) <= n, "dwt2: invalid level count ", levels);
  int m = n;
  for (int l = 0; l < levels; ++l) {
    detail::haar_step_forward(image, m);
    m /= 2;
  }
  return image;
}

/// Exact inverse of dwt2.
inline Mat idwt2(Mat coeffs, int levels) {
  const int n = static_cast<int>(coeffs.rows());
  DFD_REQUIRE(coeffs.cols() == n, "idwt2: coefficients must be square");
  DFD_REQUIRE(detail::is_power_of_two(n), "idwt2: side must be a power of two");
  DFD_REQUIRE(levels >= 1 && (1 << levels) <= n, "idwt2: invalid level count ", levels);
  int m = n >> (levels - 1);
  for (int l = 0; l < levels; ++l) {
    detail::haar_step_inverse(coeffs, m);
    m *= 2;
  }
  return coeffs;
}

/// Orthonormal 2D Haar basis on n x n images, flattened row-major. Column
/// index equals the coefficient position in the dwt2 layout, so analysis with
/// these atoms is exactly the wavelet transform.
struct HaarBasis2D {
  int n = 0;
  int levels = 0;
  Mat atoms;                  // n^2 columns of length n^2
  std::vector<int> level_of;  // per atom: 1..levels (1 = finest details), levels+1 = scaling

  int size() const { return static_cast<int>(atoms.cols()); }
};

inline int haar_level_of_position(int row, int col, int n, int levels) {
  const int outer = std::max(row, col);
  for (int t = 1; t <= levels; ++t) {
    if (outer >= (n >> t)) return t;
  }
  return levels + 1;  // scaling block
}

inline HaarBasis2D make_haar_basis_2d(int n, int levels) {
  DFD_REQUIRE(detail::is_power_of_two(n), "haar basis: side must be a power of two");
  DFD_REQUIRE(levels >= 1 && (1 << levels) <= n, "haar basis: invalid level count ",
              levels);
  HaarBasis2D basis;
  basis.n = n;
  basis.levels = levels;
  basis.atoms.resize(n * n, n * n);
  basis.level_of.resize(static_cast<std::size_t>(n) * n);
  Mat unit = Mat::Zero(n, n);
  for (int row = 0; row < n; ++row) {
    for (int col = 0; col < n; ++col) {
      const int idx = row * n + col;
      unit(row, col) = 1.0;
      const Mat atom = idwt2(unit, levels);
      unit(row, col) = 0.0;
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) basis.atoms(r * n + c, idx) = atom(r, c);
      basis.level_of[idx] = haar_level_of_position(row, col, n, levels);
    }
  }
  return basis;
}

}  // namespace dfd
