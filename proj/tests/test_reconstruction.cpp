#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "dfd/core/grid.hpp"
#include "dfd/core/rng.hpp"
#include "dfd/filters.hpp"
#include "dfd/frame.hpp"
#include "dfd/reconstruction.hpp"

namespace {

dfd::Vec log_spaced_kappa(double lo, double hi, int n) {
  const std::vector<double> g = dfd::logspace(lo, hi, n);
  dfd::Vec k(n);
  for (int i = 0; i < n; ++i) k[i] = g[static_cast<size_t>(i)];
  return k;
}

std::vector<dfd::ScalarFilterFamily> penalized_families() {
  return {dfd::soft_threshold_family(),
          dfd::huber_stationary_family(1.0, 1.0),
          dfd::huber_nonstationary_family(1.0, 1.0),
          dfd::tikhonov_family(),
          dfd::tsvd_family(),
          dfd::pnp_staircase_family(0.9, 1.0)};
}

}  // namespace

TEST_CASE("filtered reconstruction divides the profile output by kappa",
          "[reconstruction]") {
  const dfd::DFD d = dfd::dfd_diagonal((dfd::Vec(2) << 1.0, 0.5).finished());
  const auto r = dfd::make_reconstructor(d, dfd::soft_threshold_family());
  const dfd::Vec y = (dfd::Vec(2) << 1.0, 1.0).finished();

  const dfd::ReconstructionResult res = dfd::reconstruct(r, 0.1, y);
  REQUIRE(res.coefficients[0] == Catch::Approx(0.9).margin(1e-14));
  REQUIRE(res.coefficients[1] == Catch::Approx(1.6).margin(1e-14));
  REQUIRE(res.x[0] == res.coefficients[0]);  // identity dual frame
  REQUIRE(res.x[1] == res.coefficients[1]);
  REQUIRE(res.in_domain);
  REQUIRE(std::isfinite(res.regularizer_value));
  // per-channel penalty (alpha/kappa)|kappa c| summed over both channels
  REQUIRE(res.regularizer_value ==
          Catch::Approx(0.1 * 0.9 + (0.1 / 0.5) * (0.5 * 1.6)).margin(1e-12));
}

TEST_CASE("damped linear reconstruction approaches the data as alpha vanishes",
          "[reconstruction]") {
  const dfd::DFD d = dfd::dfd_diagonal(dfd::Vec::Ones(5));
  const auto r = dfd::make_reconstructor(d, dfd::tikhonov_family());
  dfd::Rng rng(71);
  dfd::Vec y(5);
  for (int i = 0; i < 5; ++i) y[i] = rng.normal();

  const dfd::Vec x = dfd::reconstruct(r, 1e-10, y).x;
  REQUIRE((x - y).lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("zero data reconstructs to zero for every built-in family",
          "[reconstruction]") {
  const dfd::DFD d = dfd::dfd_diagonal((dfd::Vec(3) << 1.0, 0.4, 0.05).finished());
  for (const auto& f : penalized_families()) {
    const auto r = dfd::make_reconstructor(d, f);
    const dfd::ReconstructionResult res = dfd::reconstruct(r, 0.25, dfd::Vec::Zero(3));
    CAPTURE(f.name);
    REQUIRE(res.coefficients.norm() == 0.0);
    REQUIRE(res.x.norm() == 0.0);
    REQUIRE(res.regularizer_value == 0.0);
  }
}

TEST_CASE("reconstruction rejects mismatched data dimensions", "[reconstruction]") {
  const dfd::DFD d = dfd::dfd_diagonal((dfd::Vec(2) << 1.0, 0.5).finished());
  const auto r = dfd::make_reconstructor(d, dfd::soft_threshold_family());
  REQUIRE_THROWS_AS(dfd::reconstruct(r, 0.1, dfd::Vec::Zero(3)), std::invalid_argument);
  REQUIRE_THROWS_AS(dfd::make_reconstructor(d, dfd::soft_threshold_family(), 5.0),
                    std::invalid_argument);
}

TEST_CASE("brute-force solver matches the soft-threshold closed form",
          "[reconstruction]") {
  const dfd::Vec kappa = (dfd::Vec(3) << 1.0, 0.5, 0.2).finished();
  const auto r = dfd::make_reconstructor(dfd::dfd_diagonal(kappa),
                                         dfd::soft_threshold_family());
  const double alpha = 0.3;
  for (double base : {-2.5, -0.4, 0.0, 0.1, 1.7, 6.0}) {
    dfd::Vec z(3);
    z << base, -base + 0.2, 0.5 * base;
    const dfd::Vec got = dfd::variational_oracle(r, alpha, z);
    for (int i = 0; i < 3; ++i) {
      const double t = alpha / kappa[i];
      const double expected =
          (std::abs(z[i]) > t ? (z[i] > 0 ? z[i] - t : z[i] + t) : 0.0) / kappa[i];
      CAPTURE(base, i);
      REQUIRE(got[i] == Catch::Approx(expected).margin(1e-8));
    }
  }
  REQUIRE(dfd::variational_oracle(r, alpha, dfd::Vec::Zero(3)).norm() == 0.0);
}

TEST_CASE("fixed-point solver reproduces the closed-form damped-linear solution",
          "[reconstruction]") {
  const dfd::Vec kappa = (dfd::Vec(3) << 1.0, 0.5, 0.125).finished();
  const auto r = dfd::make_reconstructor(dfd::dfd_diagonal(kappa), dfd::tikhonov_family());
  const double alpha = 0.3;
  const dfd::Vec z = (dfd::Vec(3) << 1.2, -0.4, 2.0).finished();

  const dfd::Vec got = dfd::fixed_point_oracle(r, alpha, z, 1e-12);
  for (int i = 0; i < 3; ++i) {
    const double expected = kappa[i] * z[i] / (kappa[i] * kappa[i] + alpha);
    REQUIRE(got[i] == Catch::Approx(expected).margin(1e-10));
  }

  REQUIRE(dfd::fixed_point_oracle(r, alpha, dfd::Vec::Zero(3)).norm() == 0.0);

  REQUIRE_THROWS_WITH(dfd::fixed_point_oracle(r, alpha, z, 1e-14, 3),
                      Catch::Matchers::ContainsSubstring("no convergence within 3"));
}

TEST_CASE("the three coefficient solvers agree on random diagonal problems",
          "[reconstruction][oracle]") {
  const auto families = penalized_families();
  dfd::Rng rng(2024);
  for (int rep = 0; rep < 12; ++rep) {
    const int n = 50;
    dfd::Vec kappa(n), z(n);
    for (int i = 0; i < n; ++i) {
      kappa[i] = rng.log_uniform(1e-3, 1.0);
      z[i] = rng.normal();
    }
    const dfd::DFD d = dfd::dfd_diagonal(kappa);
    for (const auto& f : families) {
      const auto r = dfd::make_reconstructor(d, f);
      for (double alpha : {0.25, 1.0}) {
        // diagonal decomposition: the data vector is its own v-coefficient
        // vector, so reconstruct() sees exactly z
        const dfd::Vec rec = dfd::reconstruct(r, alpha, z).coefficients;
        const dfd::Vec var = dfd::variational_oracle(r, alpha, z);
        const dfd::Vec fix = dfd::fixed_point_oracle(r, alpha, z);
        CAPTURE(rep, f.name, alpha);
        REQUIRE((rec - var).lpNorm<Eigen::Infinity>() <= 1e-6);
        REQUIRE((rec - fix).lpNorm<Eigen::Infinity>() <= 1e-6);
      }
    }
  }
}

TEST_CASE("regularizer value sums the per-channel penalties", "[reconstruction]") {
  const auto r = dfd::make_reconstructor(dfd::dfd_diagonal(dfd::Vec::Ones(1)),
                                         dfd::soft_threshold_family());
  REQUIRE(dfd::regularizer_value(r, 1.0, (dfd::Vec(1) << 2.0).finished()) ==
          Catch::Approx(2.0).margin(1e-14));
  REQUIRE(dfd::regularizer_value(r, 1.0, dfd::Vec::Zero(1)) == 0.0);

  // reconstructed coefficients always land where the penalty is finite
  dfd::Rng rng(5);
  const dfd::Vec kappa = log_spaced_kappa(0.05, 1.0, 8);
  const dfd::DFD d = dfd::dfd_diagonal(kappa);
  for (const auto& f : penalized_families()) {
    const auto rr = dfd::make_reconstructor(d, f);
    for (int rep = 0; rep < 5; ++rep) {
      dfd::Vec y(8);
      for (int i = 0; i < 8; ++i) y[i] = 2.0 * rng.normal();
      const dfd::ReconstructionResult res = dfd::reconstruct(rr, 0.5, y);
      CAPTURE(f.name, rep);
      REQUIRE(res.in_domain);
      REQUIRE(std::isfinite(res.regularizer_value));
      REQUIRE(res.regularizer_value >= 0.0);
    }
  }
}

TEST_CASE("distance diagnostic vanishes at the reference and expands quadratics",
          "[reconstruction]") {
  const dfd::Vec kappa = (dfd::Vec(3) << 1.0, 0.5, 0.25).finished();
  const auto r = dfd::make_reconstructor(dfd::dfd_diagonal(kappa), dfd::tikhonov_family());
  const double alpha = 0.4;
  const dfd::Vec x_true = (dfd::Vec(3) << 1.0, -2.0, 0.5).finished();
  const dfd::Vec x_rec = (dfd::Vec(3) << 0.7, -1.1, 1.5).finished();

  // valid gradient of the quadratic penalty at the reference point
  dfd::Vec omega(3);
  for (int i = 0; i < 3; ++i) omega[i] = alpha * x_true[i] / kappa[i];

  REQUIRE(dfd::bregman_diagnostic(r, x_true, x_true, omega, alpha) ==
          Catch::Approx(0.0).margin(1e-12));
  const double expected = 0.5 * alpha * (x_rec - x_true).squaredNorm();
  REQUIRE(dfd::bregman_diagnostic(r, x_rec, x_true, omega, alpha) ==
          Catch::Approx(expected).margin(1e-10));
}

TEST_CASE("distance diagnostic is nonnegative for valid subgradient selections",
          "[reconstruction]") {
  const dfd::Vec kappa = (dfd::Vec(3) << 1.0, 0.5, 0.25).finished();
  const auto r = dfd::make_reconstructor(dfd::dfd_diagonal(kappa),
                                         dfd::soft_threshold_family());
  const double alpha = 0.4;
  const dfd::Vec x_true = (dfd::Vec(3) << 1.0, -2.0, 0.5).finished();
  dfd::Vec omega(3);
  for (int i = 0; i < 3; ++i) {
    omega[i] = (alpha / kappa[i]) * (x_true[i] > 0 ? 1.0 : -1.0);
  }

  dfd::Rng rng(9);
  for (int rep = 0; rep < 20; ++rep) {
    dfd::Vec x_rec(3);
    for (int i = 0; i < 3; ++i) x_rec[i] = 2.0 * rng.normal();
    REQUIRE(dfd::bregman_diagnostic(r, x_rec, x_true, omega, alpha) >= -1e-12);
  }

  // a selection outside the subdifferential is rejected, naming the channel
  dfd::Vec bad = omega;
  bad[1] = 2.0 * alpha / kappa[1];
  REQUIRE_THROWS_WITH(dfd::bregman_diagnostic(r, x_true, x_true, bad, alpha),
                      Catch::Matchers::ContainsSubstring("omega[1]"));
}

TEST_CASE("stability ratios stay below the frame-constant bound",
          "[reconstruction][stability]") {
  dfd::Rng rng(37);
  dfd::Mat a(18, 14);
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < a.cols(); ++j) a(i, j) = 0.3 * rng.normal();
  }
  const dfd::DFD d = dfd::dfd_from_svd(a);
  const double norm_v = dfd::frame_operator_norm(d.v);
  const double norm_udual = dfd::frame_operator_norm(d.u_dual);

  dfd::Vec y(18);
  for (int i = 0; i < 18; ++i) y[i] = rng.normal();
  const double alpha = 0.5;
  const dfd::Vec z = dfd::analysis(d.v, y);

  struct Run {
    dfd::Vec y_pert;
    double delta_coeff;
  };
  std::vector<Run> runs;
  double max_delta = 0.0;
  for (int k = 1; k <= 8; ++k) {
    dfd::Vec dir(18);
    for (int i = 0; i < 18; ++i) dir[i] = rng.normal();
    dir *= std::pow(2.0, -k) * y.norm() / dir.norm();
    Run run{y + dir, (dfd::analysis(d.v, y + dir) - z).norm()};
    max_delta = std::max(max_delta, run.delta_coeff);
    runs.push_back(std::move(run));
  }

  for (const auto& f : {dfd::soft_threshold_family(), dfd::huber_stationary_family(1.0, 1.0),
                        dfd::tikhonov_family(), dfd::tsvd_family()}) {
    REQUIRE(f.constants.has_d());
    REQUIRE(f.constants.has_e());
    const double a_floor =
        f.constants.d * alpha / (z.lpNorm<Eigen::Infinity>() + max_delta);
    const double bound = std::sqrt(1.0 / (a_floor * a_floor) +
                                   f.constants.e * f.constants.e / alpha) *
                         norm_v * norm_udual;
    const auto r = dfd::make_reconstructor(d, f);
    const dfd::Vec base = dfd::reconstruct(r, alpha, y).x;
    double prev_diff = dfd::kInf;
    for (const auto& run : runs) {
      const double diff = (dfd::reconstruct(r, alpha, run.y_pert).x - base).norm();
      const double ratio = diff / (run.y_pert - y).norm();
      CAPTURE(f.name, run.delta_coeff);
      REQUIRE(ratio <= bound + 1e-9);
      prev_diff = diff;
    }
    // shrinking perturbations produce shrinking output differences
    REQUIRE(prev_diff <= bound * runs.back().delta_coeff + 1e-12);
  }
}

TEST_CASE("exact-data reconstructions converge to the pseudo-inverse",
          "[reconstruction][convergence]") {
  const int n = 32;
  const dfd::Vec kappa = log_spaced_kappa(0.05, 1.0, n);
  const dfd::DFD d = dfd::dfd_diagonal(kappa);
  dfd::Rng rng(13);
  dfd::Vec x_true(n);
  for (int i = 0; i < n; ++i) x_true[i] = 3.0 * rng.normal();
  const dfd::Vec y = kappa.cwiseProduct(x_true);
  REQUIRE((dfd::dfd_pseudo_inverse(d, y) - x_true).norm() <= 1e-10);

  for (const auto& f : {dfd::soft_threshold_family(), dfd::huber_stationary_family(1.0, 1.0),
                        dfd::huber_nonstationary_family(1.0, 1.0), dfd::tikhonov_family(),
                        dfd::tsvd_family()}) {
    const auto r = dfd::make_reconstructor(d, f);
    const double err_start = (dfd::reconstruct(r, 1.0, y).x - x_true).norm();
    const double err_end =
        (dfd::reconstruct(r, std::pow(2.0, -30), y).x - x_true).norm();
    CAPTURE(f.name, err_start, err_end);
    REQUIRE(err_end < 1e-4);
    REQUIRE(err_end < err_start);
  }
}

TEST_CASE("noisy reconstructions with the linear parameter rule track the exact floor",
          "[reconstruction][convergence]") {
  const int n = 32;
  const dfd::Vec kappa = log_spaced_kappa(0.05, 1.0, n);
  const dfd::DFD d = dfd::dfd_diagonal(kappa);
  dfd::Rng rng(29);
  dfd::Vec x_true(n);
  for (int i = 0; i < n; ++i) x_true[i] = 3.0 * rng.normal();
  const dfd::Vec y = kappa.cwiseProduct(x_true);
  const int n_seeds = 10;

  for (const auto& f : {dfd::soft_threshold_family(), dfd::tikhonov_family()}) {
    const auto r = dfd::make_reconstructor(d, f);
    double first_err = 0.0, last_err = 0.0, last_floor = 0.0;
    for (int k = 1; k <= 12; ++k) {
      const double delta = std::pow(2.0, -k);
      const double alpha = delta * y.norm();  // linear rule, unit constant
      const double floor = (dfd::reconstruct(r, alpha, y).x - x_true).norm();
      double mean_err = 0.0;
      for (int seed = 0; seed < n_seeds; ++seed) {
        dfd::Vec noise(n);
        for (int i = 0; i < n; ++i) noise[i] = rng.normal();
        noise *= delta * y.norm() / noise.norm();
        mean_err += (dfd::reconstruct(r, alpha, y + noise).x - x_true).norm();
      }
      mean_err /= n_seeds;
      if (k == 1) first_err = mean_err;
      last_err = mean_err;
      last_floor = floor;
    }
    CAPTURE(f.name, first_err, last_err, last_floor);
    REQUIRE(last_err < first_err);
    REQUIRE(last_err <= 10.0 * last_floor);
  }
}
