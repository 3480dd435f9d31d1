#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dfd/core/require.hpp"
#include "dfd/core/rng.hpp"

namespace dfd {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// A linear map with explicit apply/adjoint actions. Dense matrices are the
/// canonical representation; matrix-free maps supply callbacks and can be
/// densified column-by-column when a factorization is needed.
struct LinearOperator {
  int rows = 0;
  int cols = 0;
  std::function<Vec(const Vec&)> apply_fn;
  std::function<Vec(const Vec&)> adjoint_fn;
  std::shared_ptr<const Mat> dense;  // set when constructed from a matrix

  static LinearOperator from_matrix(Mat a) {
    LinearOperator op;
    op.rows = static_cast<int>(a.rows());
    op.cols = static_cast<int>(a.cols());
    auto m = std::make_shared<const Mat>(std::move(a));
    op.dense = m;
    op.apply_fn = [m](const Vec& x) { return Vec(*m * x); };
    op.adjoint_fn = [m](const Vec& y) { return Vec(m->transpose() * y); };
    return op;
  }

  Vec apply(const Vec& x) const {
    DFD_REQUIRE(static_cast<int>(x.size()) == cols, "operator apply: expected dim ", cols,
                ", got ", x.size());
    return apply_fn(x);
  }

  Vec adjoint(const Vec& y) const {
    DFD_REQUIRE(static_cast<int>(y.size()) == rows, "operator adjoint: expected dim ",
                rows, ", got ", y.size());
    return adjoint_fn(y);
  }

  /// Dense form; materialized from the apply callback if not already stored.
  Mat to_dense() const {
    if (dense) return *dense;
    Mat a(rows, cols);
    Vec e = Vec::Zero(cols);
    for (int j = 0; j < cols; ++j) {
      e(j) = 1.0;
      a.col(j) = apply_fn(e);
      e(j) = 0.0;
    }
    return a;
  }
};

/// A finite family of vectors in a common ambient space; columns are atoms.
struct Frame {
  Mat vectors;

  Frame() = default;
  explicit Frame(Mat v) : vectors(std::move(v)) {}

  int ambient_dim() const { return static_cast<int>(vectors.rows()); }
  int size() const { return static_cast<int>(vectors.cols()); }
};

/// Analysis operator: coefficient c_i = <y, frame atom i>.
inline Vec analysis(const Frame& f, const Vec& y) {
  DFD_REQUIRE(static_cast<int>(y.size()) == f.ambient_dim(),
              "analysis: expected dim ", f.ambient_dim(), ", got ", y.size());
  return f.vectors.transpose() * y;
}

/// Synthesis operator: sum_i c_i * atom_i.
inline Vec synthesis(const Frame& f, const Vec& c) {
  DFD_REQUIRE(static_cast<int>(c.size()) == f.size(), "synthesis: expected ", f.size(),
              " coefficients, got ", c.size());
  return f.vectors * c;
}

/// Diagonal frame decomposition of a linear operator: two frames u (domain
/// side) and v (data side), strictly positive quasi-singular values kappa
/// satisfying A* v_i = kappa_i u_i, and a dual frame u_dual giving perfect
/// reconstruction on span(u).
struct DFD {
  Frame u;
  Frame v;
  Frame u_dual;
  Vec kappa;
  LinearOperator forward;
  double tol_dfd = 1e-10;

  int count() const { return static_cast<int>(kappa.size()); }
  double max_kappa() const { return kappa.maxCoeff(); }
};

/// Pseudo-inverse through the decomposition: synthesize dual atoms weighted by
/// <y, v_i> / kappa_i.
inline Vec dfd_pseudo_inverse(const DFD& d, const Vec& y) {
  Vec c = analysis(d.v, y);
  c.array() /= d.kappa.array();
  return synthesis(d.u_dual, c);
}

/// Builds the decomposition from a dense SVD. Singular values below
/// 1e-12 * sigma_max are treated as numerical kernel and dropped.
inline DFD dfd_from_svd(const Mat& a) {
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sigma = svd.singularValues();
  const double sigma_max = sigma.size() > 0 ? sigma(0) : 0.0;
  DFD_REQUIRE(sigma_max > 0.0, "dfd_from_svd: zero operator has no decomposition");
  const double drop = 1e-12 * sigma_max;
  int keep = 0;
  while (keep < static_cast<int>(sigma.size()) && sigma(keep) > drop) ++keep;
  DFD dfd;
  dfd.u = Frame(svd.matrixV().leftCols(keep));
  dfd.v = Frame(svd.matrixU().leftCols(keep));
  dfd.u_dual = dfd.u;  // orthonormal system is self-dual
  dfd.kappa = sigma.head(keep);
  dfd.forward = LinearOperator::from_matrix(a);
  dfd.tol_dfd = 1e-10;
  return dfd;
}

/// Decomposition of the componentwise multiplication operator x -> kappa .* x
/// in the standard basis.
inline DFD dfd_diagonal(const Vec& kappa) {
  DFD_REQUIRE(kappa.size() > 0, "dfd_diagonal: empty kappa");
  DFD_REQUIRE(kappa.minCoeff() > 0.0, "dfd_diagonal: kappa must be strictly positive");
  const int n = static_cast<int>(kappa.size());
  DFD dfd;
  dfd.u = Frame(Mat::Identity(n, n));
  dfd.v = dfd.u;
  dfd.u_dual = dfd.u;
  dfd.kappa = kappa;
  dfd.forward = LinearOperator::from_matrix(Mat(kappa.asDiagonal()));
  dfd.tol_dfd = 1e-10;
  return dfd;
}

struct DfdVerification {
  double max_quasi_singular_residual = 0.0;  // worst ||A* v_i - kappa_i u_i||
  int worst_index = -1;
  double max_dual_reconstruction_error = 0.0;  // worst ||T_udual T_u* x - x|| / ||x||
  bool pass = false;
};

/// Checks the quasi-singular relations for every atom and the dual-frame
/// reconstruction identity on random samples from span(u).
inline DfdVerification verify_dfd(const DFD& d, int n_samples = 10,
                                  std::uint64_t seed = 20240817u) {
  DfdVerification report;
  for (int i = 0; i < d.count(); ++i) {
    const Vec r = d.forward.adjoint(d.v.vectors.col(i)) - d.kappa(i) * d.u.vectors.col(i);
    const double res = r.norm() / std::max(1.0, d.u.vectors.col(i).norm());
    if (res > report.max_quasi_singular_residual) {
      report.max_quasi_singular_residual = res;
      report.worst_index = i;
    }
  }
  Rng rng(seed);
  for (int s = 0; s < n_samples; ++s) {
    Vec c(d.count());
    for (int i = 0; i < d.count(); ++i) c(i) = rng.normal();
    const Vec x = synthesis(d.u, c);  // a point in span(u)
    if (x.norm() == 0.0) continue;
    const Vec x2 = synthesis(d.u_dual, analysis(d.u, x));
    report.max_dual_reconstruction_error =
        std::max(report.max_dual_reconstruction_error, (x2 - x).norm() / x.norm());
  }
  report.pass = report.max_quasi_singular_residual <= d.tol_dfd &&
                report.max_dual_reconstruction_error <= d.tol_dfd;
  return report;
}

}  // namespace dfd
