#pragma once

#include <cmath>
#include <memory>

#include <Eigen/Cholesky>

#include "dfd/core/require.hpp"
#include "dfd/frame.hpp"
#include "dfd/radon.hpp"
#include "dfd/wavelet.hpp"

namespace dfd {

/// Wavelet-vaguelette decomposition of a discrete Radon operator: u is the
/// orthonormal 2D Haar basis, and for each atom the data-side vector solves
/// A* v_lambda = kappa_lambda u_lambda with ||v_lambda|| = 1. The unnormalized
/// solve is v0 = A (A^T A)^{-1} u_lambda (so A* v0 = u_lambda exactly);
/// normalizing gives kappa_lambda = 1 / ||v0||.
inline DFD dfd_wavelet_vaguelette(const RadonOperator& radon, int levels) {
  const int n = radon.n;
  DFD_REQUIRE(levels >= 1 && (1 << levels) <= n,
              "wavelet-vaguelette: invalid level count ", levels);
  const HaarBasis2D basis = make_haar_basis_2d(n, levels);
  const int n_atoms = basis.size();

  // dense forward matrix, built column by column from the ray weights
  Mat a(radon.rows(), radon.cols());
  Vec e = Vec::Zero(radon.cols());
  for (int j = 0; j < radon.cols(); ++j) {
    e(j) = 1.0;
    a.col(j) = radon.apply(e);
    e(j) = 0.0;
  }

  const Mat gram = a.transpose() * a;
  Eigen::LDLT<Mat> ldlt(gram);
  DFD_ENSURE(ldlt.info() == Eigen::Success,
             "wavelet-vaguelette: normal-equation factorization failed");

  DFD dfd;
  dfd.tol_dfd = 1e-6;
  dfd.u = Frame(basis.atoms);
  dfd.u_dual = dfd.u;
  dfd.kappa.resize(n_atoms);
  Mat v(radon.rows(), n_atoms);
  for (int j = 0; j < n_atoms; ++j) {
    const Vec h = ldlt.solve(basis.atoms.col(j));
    const Vec w = a * h;
    const double norm = w.norm();
    DFD_ENSURE(norm > 0.0, "wavelet-vaguelette: zero vaguelette at atom ", j);
    dfd.kappa(j) = 1.0 / norm;
    v.col(j) = w / norm;
    const Vec residual = a.transpose() * v.col(j) - dfd.kappa(j) * basis.atoms.col(j);
    DFD_ENSURE(residual.norm() <= dfd.tol_dfd,
               "wavelet-vaguelette: atom ", j, " residual ", residual.norm(),
               " exceeds tolerance ", dfd.tol_dfd);
  }
  dfd.v = Frame(std::move(v));

  dfd.forward = radon.linear_operator();
  dfd.forward.dense = std::make_shared<const Mat>(std::move(a));
  return dfd;
}

}  // namespace dfd
