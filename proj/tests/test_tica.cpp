#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "wesbench/common.hpp"
#include "wesbench/tica.hpp"

using namespace wesbench;

namespace {

// Unit-variance AR(1) sequence: x_{t+1} = rho x_t + sqrt(1-rho^2) xi.
Eigen::VectorXd ar1_series(double rho, int n, Rng& rng) {
  Eigen::VectorXd x(n);
  x[0] = rng.normal();
  const double s = std::sqrt(1.0 - rho * rho);
  for (int t = 1; t < n; ++t)
    x[t] = rho * x[t - 1] + s * rng.normal();
  return x;
}

double column_variance(const Eigen::VectorXd& z) {
  const double mu = z.mean();
  return (z.array() - mu).square().sum() / static_cast<double>(z.size());
}

double lag_autocorr(const Eigen::VectorXd& z, int lag) {
  const int n = static_cast<int>(z.size()) - lag;
  const double mu = z.mean();
  double num = 0.0, den = 0.0;
  for (int t = 0; t < n; ++t)
    num += (z[t] - mu) * (z[t + lag] - mu);
  for (int t = 0; t < z.size(); ++t)
    den += (z[t] - mu) * (z[t] - mu);
  return num / den * static_cast<double>(z.size()) / n;
}

double angle_deg(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double c = std::abs(a.dot(b)) / (a.norm() * b.norm());
  return std::acos(std::min(1.0, c)) * 180.0 / M_PI;
}

// Symmetrized covariance pair computed with explicit loops, independent of
// the library's matrix-product formulation.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd>
oracle_covariances(const std::vector<Eigen::MatrixXd>& trajs, int lag) {
  const Eigen::Index F = trajs.front().cols();
  Eigen::Index pairs = 0;
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(F);
  for (const auto& X : trajs) {
    const Eigen::Index n = X.rows() - lag;
    if (n <= 0)
      continue;
    pairs += n;
    for (Eigen::Index t = 0; t < n; ++t)
      for (Eigen::Index j = 0; j < F; ++j)
        mu[j] += X(t, j) + X(t + lag, j);
  }
  mu /= 2.0 * pairs;
  Eigen::MatrixXd c00 = Eigen::MatrixXd::Zero(F, F);
  Eigen::MatrixXd c0t = Eigen::MatrixXd::Zero(F, F);
  for (const auto& X : trajs) {
    const Eigen::Index n = X.rows() - lag;
    for (Eigen::Index t = 0; t < n; ++t)
      for (Eigen::Index i = 0; i < F; ++i)
        for (Eigen::Index j = 0; j < F; ++j) {
          const double hi = X(t, i) - mu[i], hj = X(t, j) - mu[j];
          const double ti = X(t + lag, i) - mu[i], tj = X(t + lag, j) - mu[j];
          c00(i, j) += hi * hj + ti * tj;
          c0t(i, j) += hi * tj + ti * hj;
        }
  }
  c00 /= 2.0 * pairs;
  c0t /= 2.0 * pairs;
  return {c00, c0t};
}

Conformation frame2d(double x, double y) {
  Conformation c;
  c.dims = 2;
  c.positions = {static_cast<float>(x), static_cast<float>(y)};
  return c;
}

} // namespace

TEST_CASE("white noise has no slow components") {
  Rng rng(3, 910, 0);
  Eigen::MatrixXd X(100000, 2);
  for (Eigen::Index t = 0; t < X.rows(); ++t) {
    X(t, 0) = rng.normal();
    X(t, 1) = rng.normal();
  }
  TicaModel m = fit_tica(X, 10, 2);
  REQUIRE(m.eigenvalues.size() == 2);
  for (Eigen::Index k = 0; k < m.eigenvalues.size(); ++k)
    REQUIRE(std::abs(m.eigenvalues[k]) < 0.05);
}

TEST_CASE("mixed AR(1) pair is unmixed with its timescales") {
  // Sources with autocorrelation 0.9 (slow) and 0.5 (fast), observed through
  // a 30-degree rotation. The leading component must recover the slow
  // direction and its eigenvalue the autocorrelation.
  Rng rng(3, 911, 0);
  const int n = 100000;
  Eigen::VectorXd slow = ar1_series(0.9, n, rng);
  Eigen::VectorXd fast = ar1_series(0.5, n, rng);

  const double th = M_PI / 6.0;
  Eigen::Matrix2d Q;
  Q << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  Eigen::MatrixXd S(n, 2);
  S.col(0) = slow;
  S.col(1) = fast;
  Eigen::MatrixXd X = S * Q.transpose(); // rows are Q * s_t

  TicaModel m = fit_tica(X, 1, 2);
  REQUIRE(m.eigenvalues.size() == 2);
  REQUIRE(m.eigenvalues[0] > 0.85);
  REQUIRE(m.eigenvalues[0] < 0.95);
  REQUIRE(m.eigenvalues[1] == Catch::Approx(0.5).margin(0.05));
  REQUIRE(m.eigenvalues[0] > m.eigenvalues[1]);

  SECTION("leading axis within 5 degrees of the slow direction") {
    REQUIRE(angle_deg(m.transform.col(0), Q.col(0)) < 5.0);
  }

  SECTION("projections are whitened and self-consistent") {
    Eigen::MatrixXd Z = project(m, X);
    REQUIRE(Z.rows() == n);
    REQUIRE(Z.cols() == 2);
    REQUIRE(column_variance(Z.col(0)) == Catch::Approx(1.0).margin(0.02));
    REQUIRE(column_variance(Z.col(1)) == Catch::Approx(1.0).margin(0.02));
    // A component's eigenvalue is the autocorrelation of its projection.
    REQUIRE(lag_autocorr(Z.col(0), 1) ==
            Catch::Approx(m.eigenvalues[0]).margin(0.05));
    REQUIRE(lag_autocorr(Z.col(1), 1) ==
            Catch::Approx(m.eigenvalues[1]).margin(0.05));
  }

  SECTION("non-orthogonal mixing still separates the slow source") {
    Eigen::Matrix2d A;
    A << 2.0, 0.3, 0.0, 1.0; // skewed, scaled mixing
    Eigen::MatrixXd Y = S * A.transpose();
    TicaModel skew = fit_tica(Y, 1, 2);
    Eigen::VectorXd z0 = project(skew, Y).col(0);
    const double c = z0.dot(slow) / std::sqrt(z0.squaredNorm() * slow.squaredNorm());
    REQUIRE(std::abs(c) > 0.99);
    REQUIRE(skew.eigenvalues[0] > 0.85);
  }
}

TEST_CASE("fit matches an independent generalized eigensolver") {
  Rng rng(3, 912, 0);
  std::vector<Eigen::MatrixXd> trajs;
  for (int j = 0; j < 3; ++j) {
    Eigen::MatrixXd X(60 + 10 * j, 4);
    Eigen::RowVectorXd prev = Eigen::RowVectorXd::Zero(4);
    for (Eigen::Index t = 0; t < X.rows(); ++t) {
      for (int f = 0; f < 4; ++f)
        X(t, f) = 0.6 * prev[f] + rng.normal() + 0.2 * f;
      prev = X.row(t);
    }
    trajs.push_back(X);
  }

  const int lag = 3;
  TicaModel m = fit_tica(trajs, lag, 4);
  auto [c00, c0t] = oracle_covariances(trajs, lag);

  SECTION("eigenvalues solve C0t v = lambda C00 v") {
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(c0t, c00);
    Eigen::VectorXd ref = ges.eigenvalues().reverse(); // descending
    REQUIRE(m.eigenvalues.size() == 4);
    for (Eigen::Index k = 0; k < 4; ++k)
      REQUIRE(m.eigenvalues[k] == Catch::Approx(ref[k]).margin(1e-10));
  }

  SECTION("transform columns are generalized eigenvectors") {
    for (Eigen::Index k = 0; k < m.transform.cols(); ++k) {
      Eigen::VectorXd u = m.transform.col(k);
      Eigen::VectorXd resid = c0t * u - m.eigenvalues[k] * (c00 * u);
      REQUIRE(resid.norm() < 1e-8 * std::max(1.0, u.norm()));
    }
  }

  SECTION("eigenvalues are sorted and bounded by one") {
    for (Eigen::Index k = 0; k < 4; ++k) {
      REQUIRE(m.eigenvalues[k] <= 1.0 + 1e-10);
      if (k > 0)
        REQUIRE(m.eigenvalues[k] <= m.eigenvalues[k - 1]);
    }
  }

  SECTION("trajectory boundaries break lagged pairs") {
    Eigen::MatrixXd joined(trajs[0].rows() + trajs[1].rows() + trajs[2].rows(), 4);
    joined << trajs[0], trajs[1], trajs[2];
    TicaModel glued = fit_tica(joined, lag, 4);
    REQUIRE(glued.eigenvalues[0] != m.eigenvalues[0]);
  }

  SECTION("refit is bit-identical") {
    TicaModel again = fit_tica(trajs, lag, 4);
    REQUIRE(again.transform == m.transform);
    REQUIRE(again.eigenvalues == m.eigenvalues);
  }

  SECTION("sign convention pins the dominant entry positive") {
    for (Eigen::Index k = 0; k < m.transform.cols(); ++k) {
      Eigen::Index imax = 0;
      m.transform.col(k).cwiseAbs().maxCoeff(&imax);
      REQUIRE(m.transform(imax, k) > 0.0);
    }
  }

  SECTION("the feature mean projects to the origin") {
    Eigen::MatrixXd z = project(m, m.mean.transpose());
    REQUIRE(z.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("rank-deficient features are detected and trimmed") {
  Rng rng(3, 913, 0);

  SECTION("a duplicated column reduces the component count") {
    Eigen::MatrixXd X(5000, 3);
    for (Eigen::Index t = 0; t < X.rows(); ++t) {
      X(t, 0) = rng.normal();
      X(t, 1) = rng.normal();
      X(t, 2) = X(t, 0); // exact copy
    }
    TicaModel m = fit_tica(X, 5, 3);
    REQUIRE(m.n_components == 2);
    REQUIRE(m.transform.cols() == 2);
    REQUIRE(m.eigenvalues.size() == 2);
  }

  SECTION("constant features have no usable directions") {
    Eigen::MatrixXd X = Eigen::MatrixXd::Ones(100, 2);
    REQUIRE_THROWS_AS(fit_tica(X, 1, 2), RankDeficient);
  }

  SECTION("requesting fewer components keeps the leading ones") {
    Eigen::MatrixXd X(5000, 3);
    for (Eigen::Index t = 0; t < X.rows(); ++t)
      for (int f = 0; f < 3; ++f)
        X(t, f) = rng.normal();
    TicaModel full = fit_tica(X, 5, 3);
    TicaModel top = fit_tica(X, 5, 1);
    REQUIRE(top.n_components == 1);
    REQUIRE(top.eigenvalues[0] == full.eigenvalues[0]);
  }
}

TEST_CASE("unusable fits are rejected") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(20, 2);
  REQUIRE_THROWS_AS(fit_tica(std::vector<Eigen::MatrixXd>{}, 1, 2),
                    InsufficientFrames);
  REQUIRE_THROWS_AS(fit_tica(X, 25, 2), InsufficientFrames); // lag too long
  REQUIRE_THROWS_AS(fit_tica(X, 19, 2), InsufficientFrames); // one pair left
  REQUIRE_THROWS_AS(fit_tica(X, 0, 2), Error);
  REQUIRE_THROWS_AS(fit_tica(X, 1, 0), Error);

  Eigen::MatrixXd Y = Eigen::MatrixXd::Random(20, 3);
  REQUIRE_THROWS_AS(fit_tica(std::vector<Eigen::MatrixXd>{X, Y}, 1, 2),
                    DimensionMismatch);

  TicaModel m = fit_tica(Eigen::MatrixXd::Random(200, 2), 1, 2);
  REQUIRE_THROWS_AS(project(m, Y), DimensionMismatch);
}

TEST_CASE("featurization maps frames to the expected vectors") {
  SECTION("raw 2D coordinates pass through") {
    FeatureSpec spec;
    spec.kind = FeatureKind::RAW_COORDS_2D;
    Eigen::VectorXd f = featurize_frame(spec, frame2d(1.25, -0.5));
    REQUIRE(f.size() == 2);
    REQUIRE(f[0] == 1.25);
    REQUIRE(f[1] == -0.5);

    Conformation c3;
    c3.dims = 3;
    c3.positions = {0.0f, 0.0f, 0.0f};
    REQUIRE_THROWS_AS(featurize_frame(spec, c3), DimensionMismatch);
  }

  SECTION("pairwise distances on a 3-4-5 triangle") {
    FeatureSpec spec;
    spec.kind = FeatureKind::PAIRWISE_DISTANCES;
    Conformation c;
    c.dims = 3;
    c.positions = {0, 0, 0, 3, 0, 0, 0, 4, 0};
    Eigen::VectorXd f = featurize_frame(spec, c);
    REQUIRE(f.size() == 3); // pairs (0,1), (0,2), (1,2)
    REQUIRE(f[0] == 3.0);
    REQUIRE(f[1] == 4.0);
    REQUIRE(f[2] == 5.0);
    REQUIRE(feature_count(spec, 3, 3) == 3);
    REQUIRE(feature_count(spec, 10, 3) == 45);
  }

  SECTION("an explicit pair list selects and orders features") {
    FeatureSpec spec;
    spec.kind = FeatureKind::PAIRWISE_DISTANCES;
    spec.pair_list = {{2, 1}, {0, 2}};
    Conformation c;
    c.dims = 3;
    c.positions = {0, 0, 0, 3, 0, 0, 0, 4, 0};
    Eigen::VectorXd f = featurize_frame(spec, c);
    REQUIRE(f.size() == 2);
    REQUIRE(f[0] == 5.0);
    REQUIRE(f[1] == 4.0);
    REQUIRE(feature_count(spec, 3, 3) == 2);

    spec.pair_list = {{0, 3}};
    REQUIRE_THROWS_AS(featurize_frame(spec, c), DimensionMismatch);
    spec.pair_list = {{1, 1}};
    REQUIRE_THROWS_AS(featurize_frame(spec, c), DimensionMismatch);
  }

  SECTION("distances are invariant under rigid motion") {
    FeatureSpec spec;
    spec.kind = FeatureKind::PAIRWISE_DISTANCES;
    Rng rng(3, 914, 0);
    Conformation c;
    c.dims = 3;
    for (int i = 0; i < 15; ++i)
      c.positions.push_back(static_cast<float>(4.0 * rng.uniform()));
    Eigen::VectorXd before = featurize_frame(spec, c);

    const double a = 1.1, ca = std::cos(a), sa = std::sin(a);
    Conformation moved = c;
    for (int i = 0; i < 5; ++i) {
      const double x = c.coord(i, 0), y = c.coord(i, 1), z = c.coord(i, 2);
      moved.positions[3 * i + 0] = static_cast<float>(ca * x - sa * y + 7.5);
      moved.positions[3 * i + 1] = static_cast<float>(sa * x + ca * y - 2.0);
      moved.positions[3 * i + 2] = static_cast<float>(z + 0.25);
    }
    Eigen::VectorXd after = featurize_frame(spec, moved);
    for (Eigen::Index k = 0; k < before.size(); ++k)
      REQUIRE(after[k] == Catch::Approx(before[k]).epsilon(1e-5));
  }

  SECTION("frame and matrix featurization agree") {
    FeatureSpec spec;
    spec.kind = FeatureKind::PAIRWISE_DISTANCES;
    Trajectory traj;
    Rng rng(3, 915, 0);
    for (int t = 0; t < 4; ++t) {
      Conformation c;
      c.dims = 3;
      for (int i = 0; i < 9; ++i)
        c.positions.push_back(static_cast<float>(rng.uniform() * 5.0));
      traj.frames.push_back(c);
    }
    Eigen::MatrixXd M = featurize(spec, traj);
    REQUIRE(M.rows() == 4);
    REQUIRE(M.cols() == 3);
    for (int t = 0; t < 4; ++t)
      REQUIRE(M.row(t).transpose() == featurize_frame(spec, traj.frames[t]));
  }
}

TEST_CASE("project_frame matches featurize-then-project") {
  Rng rng(3, 916, 0);
  std::vector<Conformation> frames;
  for (int t = 0; t < 400; ++t) {
    Conformation c;
    c.dims = 2;
    c.positions = {static_cast<float>(rng.normal()),
                   static_cast<float>(rng.normal())};
    frames.push_back(c);
  }
  FeatureSpec spec;
  spec.kind = FeatureKind::RAW_COORDS_2D;
  Eigen::MatrixXd X = featurize_frames(spec, frames);
  TicaModel m = fit_tica(X, 2, 2, spec);

  Eigen::MatrixXd Z = project(m, X);
  for (int t = 0; t < 5; ++t) {
    Eigen::RowVectorXd z = project_frame(m, frames[t]);
    REQUIRE(z == Z.row(t));
  }
}
