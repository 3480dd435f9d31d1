#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "dfd/core/require.hpp"
#include "dfd/core/rng.hpp"
#include "dfd/frame.hpp"
#include "dfd/radon.hpp"
#include "dfd/vaguelette.hpp"
#include "dfd/wavelet.hpp"

namespace dfd {

/// A fully assembled test problem: a forward map, its diagonal frame
/// decomposition, a ground-truth signal, and the exact (noise-free) data.
/// Invariants: y_exact is computed as forward.apply(x_true) at construction
/// (so the defect is zero by construction), and x_true lies in the orthogonal
/// complement of the forward map's kernel to 1e-8 (problems with a possibly
/// non-trivial kernel project their ground truth at construction).
struct InverseProblem {
  LinearOperator forward;
  DFD dfd;
  Vec x_true;
  Vec y_exact;
  /// Human-readable construction summary, echoed into experiment metadata.
  std::string description;
};

/// Additive measurement-noise description. The generated perturbation is
/// Gaussian, rescaled so that ||y_noisy - y_exact|| equals exactly
/// level * ||y_exact||; identical (seed, level) pairs reproduce the same
/// vector bit for bit.
struct NoiseModel {
  std::string kind = "gaussian";
  double level = 0.0;
  std::uint64_t seed = 0;
};

/// Row-major image flattening: pixel (row, col) maps to index row*n + col,
/// matching the pixel indexing of the discrete Radon operator and the 2D
/// Haar basis.
inline Vec image_to_vector(const Mat& image) {
  const int rows = static_cast<int>(image.rows());
  const int cols = static_cast<int>(image.cols());
  Vec out(static_cast<long>(rows) * cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out(static_cast<long>(r) * cols + c) = image(r, c);
  return out;
}

/// Inverse of image_to_vector for square n-by-n images.
inline Mat vector_to_image(const Vec& x, int n) {
  DFD_REQUIRE(static_cast<long>(n) * n == x.size(), "vector_to_image: expected ",
              static_cast<long>(n) * n, " entries, got ", x.size());
  Mat image(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) image(r, c) = x(static_cast<long>(r) * n + c);
  return image;
}

/// Piecewise-constant test image made of three disjoint dyadic rectangles
/// (designed on a 32x32 grid and rescaled to n). Being constant on dyadic
/// blocks makes it sparse in the Haar wavelet basis.
inline Mat blocks_phantom(int n) {
  DFD_REQUIRE(n >= 8, "blocks phantom: side must be at least 8, got ", n);
  Mat image = Mat::Zero(n, n);
  const auto at = [n](int coord32) { return (coord32 * n) / 32; };
  const auto fill = [&](int r0, int r1, int c0, int c1, double value) {
    for (int r = at(r0); r < at(r1); ++r)
      for (int c = at(c0); c < at(c1); ++c) image(r, c) = value;
  };
  fill(8, 16, 4, 20, 1.0);
  fill(16, 28, 16, 24, -0.7);
  fill(4, 8, 24, 28, 0.5);
  return image;
}

/// Smooth-boundary head-style test image: a sum of constant-intensity
/// ellipses (the classic ten-ellipse layout with mild contrast values).
inline Mat shepp_logan_like_phantom(int n) {
  DFD_REQUIRE(n >= 8, "ellipse phantom: side must be at least 8, got ", n);
  struct Ellipse {
    double intensity, a, b, x0, y0, phi_deg;
  };
  static constexpr Ellipse table[] = {
      {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
      {-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0},
      {-0.2, 0.11, 0.31, 0.22, 0.0, -18.0},
      {-0.2, 0.16, 0.41, -0.22, 0.0, 18.0},
      {0.1, 0.21, 0.25, 0.0, 0.35, 0.0},
      {0.1, 0.046, 0.046, 0.0, 0.1, 0.0},
      {0.1, 0.046, 0.046, 0.0, -0.1, 0.0},
      {0.1, 0.046, 0.023, -0.08, -0.605, 0.0},
      {0.1, 0.023, 0.023, 0.0, -0.606, 0.0},
      {0.1, 0.023, 0.046, 0.06, -0.605, 0.0},
  };
  Mat image = Mat::Zero(n, n);
  const double half = (n - 1) / 2.0;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const double x = (c - half) / (n / 2.0);
      const double y = (half - r) / (n / 2.0);
      double value = 0.0;
      for (const Ellipse& e : table) {
        const double phi = e.phi_deg * std::numbers::pi / 180.0;
        const double dx = x - e.x0;
        const double dy = y - e.y0;
        const double u = dx * std::cos(phi) + dy * std::sin(phi);
        const double v = -dx * std::sin(phi) + dy * std::cos(phi);
        if ((u * u) / (e.a * e.a) + (v * v) / (e.b * e.b) <= 1.0) value += e.intensity;
      }
      image(r, c) = value;
    }
  }
  return image;
}

/// Componentwise multiplication problem y = kappa .* x in the standard basis.
/// The kappas must be strictly positive, so the kernel is trivial and x_true
/// needs no projection.
inline InverseProblem make_diagonal_problem(const Vec& kappas, const Vec& x_true) {
  DFD_REQUIRE(kappas.size() == x_true.size(), "diagonal problem: kappa has ",
              kappas.size(), " entries but x_true has ", x_true.size());
  InverseProblem p;
  p.dfd = dfd_diagonal(kappas);
  p.forward = p.dfd.forward;
  p.x_true = x_true;
  p.y_exact = kappas.cwiseProduct(x_true);
  p.description = "diagonal(n=" + std::to_string(kappas.size()) + ")";
  return p;
}

/// Dense random-matrix problem with a prescribed singular spectrum: random
/// orthogonal factors around singular values decaying geometrically from 1
/// to 1/condition. The ground truth is Gaussian, projected onto the row
/// space (exact for this construction since the spectrum is known).
inline InverseProblem make_matrix_problem(int rows, int cols, double condition,
                                          std::uint64_t seed) {
  DFD_REQUIRE(rows >= 1 && cols >= 1, "matrix problem: dimensions must be positive, got ",
              rows, "x", cols);
  DFD_REQUIRE(condition >= 1.0, "matrix problem: condition must be >= 1, got ", condition);
  const int rank = std::min(rows, cols);
  Rng rng(seed);
  const auto random_orthonormal = [&rng](int dim, int k) {
    Mat g(dim, k);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < k; ++j) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Mat> qr(g);
    return Mat(qr.householderQ() * Mat::Identity(dim, k));
  };
  const Mat u = random_orthonormal(rows, rank);
  const Mat v = random_orthonormal(cols, rank);
  Vec sigma(rank);
  for (int j = 0; j < rank; ++j) {
    const double t = rank > 1 ? static_cast<double>(j) / (rank - 1) : 0.0;
    sigma(j) = std::pow(condition, -t);
  }
  const Mat a = u * sigma.asDiagonal() * v.transpose();

  Vec g(cols);
  for (int i = 0; i < cols; ++i) g(i) = rng.normal();

  InverseProblem p;
  p.dfd = dfd_from_svd(a);
  p.forward = p.dfd.forward;
  p.x_true = v * (v.transpose() * g);  // row-space projection kills any kernel part
  p.y_exact = a * p.x_true;
  p.description = "matrix(" + std::to_string(rows) + "x" + std::to_string(cols) +
                  ", condition=" + std::to_string(condition) +
                  ", seed=" + std::to_string(seed) + ")";
  return p;
}

/// Discrete 2D Radon problem over uniformly spaced angles in [0, pi), with
/// the Haar-wavelet operator-adapted decomposition. Supported phantoms:
/// "blocks" (piecewise constant, wavelet-sparse) and "shepp-logan-like"
/// (sum of constant ellipses).
inline InverseProblem make_radon_problem(int size, int n_angles, const std::string& phantom,
                                         int levels) {
  DFD_REQUIRE(size >= 8 && (size & (size - 1)) == 0,
              "radon problem: size must be a power of two >= 8, got ", size);
  DFD_REQUIRE(n_angles >= size, "radon problem: need at least ", size, " angles, got ",
              n_angles);
  Mat image;
  if (phantom == "blocks") {
    image = blocks_phantom(size);
  } else if (phantom == "shepp-logan-like") {
    image = shepp_logan_like_phantom(size);
  } else {
    DFD_REQUIRE(false, "radon problem: unknown phantom '", phantom,
                "' (expected 'blocks' or 'shepp-logan-like')");
  }

  const RadonOperator radon = make_radon_operator(size, n_angles);
  InverseProblem p;
  p.dfd = dfd_wavelet_vaguelette(radon, levels);
  p.forward = p.dfd.forward;
  p.x_true = image_to_vector(image);
  p.y_exact = p.forward.apply(p.x_true);
  p.description = "radon(size=" + std::to_string(size) +
                  ", angles=" + std::to_string(n_angles) + ", phantom=" + phantom +
                  ", levels=" + std::to_string(levels) + ")";

  // Kernel-triviality certificate: with an orthonormal domain basis u and
  // residuals r_i = A* v_i - kappa_i u_i, any kernel vector x would satisfy
  // kappa_i <x, u_i> = -<x, r_i>, hence ||x||^2 <= ||x||^2 * sum_i
  // (||r_i|| / kappa_i)^2. If that sum is below 1 the kernel is {0} and
  // x_true needs no projection.
  double certificate = 0.0;
  for (int i = 0; i < p.dfd.count(); ++i) {
    const Vec r =
        p.forward.adjoint(p.dfd.v.vectors.col(i)) - p.dfd.kappa(i) * p.dfd.u.vectors.col(i);
    const double q = r.norm() / p.dfd.kappa(i);
    certificate += q * q;
  }
  DFD_ENSURE(certificate < 1.0,
             "radon problem: cannot certify a trivial kernel (certificate ", certificate,
             " >= 1); increase the number of angles");
  return p;
}

/// Returns y_exact plus a Gaussian perturbation rescaled to the exact
/// relative norm model.level. Deterministic per (seed, level).
inline Vec add_noise(const InverseProblem& problem, const NoiseModel& model) {
  DFD_REQUIRE(model.kind == "gaussian", "noise model: unknown kind '", model.kind,
              "' (only 'gaussian' is implemented)");
  DFD_REQUIRE(model.level >= 0.0, "noise model: level must be >= 0, got ", model.level);
  if (model.level == 0.0) return problem.y_exact;
  Rng rng(model.seed);
  Vec z(problem.y_exact.size());
  for (long i = 0; i < z.size(); ++i) z(i) = rng.normal();
  const double norm = z.norm();
  DFD_ENSURE(norm > 0.0, "noise model: degenerate Gaussian draw");
  return problem.y_exact + (model.level * problem.y_exact.norm() / norm) * z;
}

}  // namespace dfd
