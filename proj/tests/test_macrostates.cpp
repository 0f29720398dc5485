#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <set>
#include <vector>

#include "wesbench/common.hpp"
#include "wesbench/msm.hpp"

using namespace wesbench;

namespace {

Eigen::MatrixXd two_blobs(int per_blob, Rng& rng) {
  Eigen::MatrixXd pts(2 * per_blob, 2);
  for (int i = 0; i < per_blob; ++i) {
    pts(i, 0) = 0.3 * rng.normal();
    pts(i, 1) = 0.3 * rng.normal();
    pts(per_blob + i, 0) = 10.0 + 0.3 * rng.normal();
    pts(per_blob + i, 1) = 10.0 + 0.3 * rng.normal();
  }
  return pts;
}

bool same_result(const KMeansResult& a, const KMeansResult& b) {
  return a.centers == b.centers && a.assignment == b.assignment &&
         a.inertia == b.inertia;
}

// Two decoupled blocks, sizes 2 and 2.
Eigen::MatrixXd decoupled_two_block() {
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(4, 4);
  T << 0.9, 0.1, 0.0, 0.0, //
      0.2, 0.8, 0.0, 0.0,  //
      0.0, 0.0, 0.7, 0.3,  //
      0.0, 0.0, 0.4, 0.6;
  return T;
}

} // namespace

TEST_CASE("k-means separates well-spaced blobs deterministically") {
  Rng rng(23, 940, 0);
  Eigen::MatrixXd pts = two_blobs(50, rng);

  KMeansResult res = kmeans(pts, 2, 11);
  REQUIRE(res.centers.rows() == 2);
  REQUIRE(res.assignment.size() == 100);

  SECTION("each blob lands in one cluster with its mean as center") {
    const int first = res.assignment[0];
    Eigen::Vector2d sum0 = Eigen::Vector2d::Zero();
    Eigen::Vector2d sum1 = Eigen::Vector2d::Zero();
    for (int i = 0; i < 50; ++i) {
      REQUIRE(res.assignment[static_cast<std::size_t>(i)] == first);
      REQUIRE(res.assignment[static_cast<std::size_t>(50 + i)] == 1 - first);
      sum0 += pts.row(i).transpose();
      sum1 += pts.row(50 + i).transpose();
    }
    REQUIRE((res.centers.row(first).transpose() - sum0 / 50.0).norm() < 1e-12);
    REQUIRE((res.centers.row(1 - first).transpose() - sum1 / 50.0).norm() <
            1e-12);
  }

  SECTION("the reported inertia is the sum of squared residuals") {
    double inertia = 0.0;
    for (Eigen::Index i = 0; i < pts.rows(); ++i)
      inertia +=
          (pts.row(i) -
           res.centers.row(res.assignment[static_cast<std::size_t>(i)]))
              .squaredNorm();
    REQUIRE(res.inertia == Catch::Approx(inertia).epsilon(1e-12));
  }

  SECTION("the same seed replays exactly; runs do not share state") {
    REQUIRE(same_result(res, kmeans(pts, 2, 11)));
  }

  SECTION("one cluster is the global mean") {
    KMeansResult one = kmeans(pts, 1, 3);
    REQUIRE((one.centers.row(0).transpose() -
             pts.colwise().mean().transpose())
                .norm() < 1e-12);
  }

  SECTION("as many clusters as points zeroes the inertia") {
    Eigen::MatrixXd few = pts.topRows(6);
    KMeansResult all = kmeans(few, 6, 5);
    REQUIRE(all.inertia == 0.0);
    std::set<int> used(all.assignment.begin(), all.assignment.end());
    REQUIRE(used.size() == 6);
  }

  SECTION("duplicated points still fill every requested cluster") {
    Eigen::MatrixXd dup(5, 1);
    dup << 0.0, 0.0, 0.0, 0.0, 10.0;
    KMeansResult res3 = kmeans(dup, 3, 7);
    REQUIRE(res3.inertia == 0.0); // empty-cluster reseeding found the outlier
    for (Eigen::Index i = 0; i < dup.rows(); ++i)
      REQUIRE((dup.row(i) -
               res3.centers.row(res3.assignment[static_cast<std::size_t>(i)]))
                  .norm() == 0.0);
  }

  SECTION("bad requests are rejected") {
    REQUIRE_THROWS_AS(kmeans(pts.topRows(3), 4, 0), TooFewFrames);
    REQUIRE_THROWS_AS(kmeans(pts, 0, 0), Error);
  }
}

TEST_CASE("membership rows are stochastic and recover decoupled blocks") {
  SECTION("two decoupled blocks come out crisp") {
    Eigen::MatrixXd chi = pcca_memberships(decoupled_two_block(), 2);
    REQUIRE(chi.rows() == 4);
    REQUIRE(chi.cols() == 2);
    for (int i = 0; i < 4; ++i) {
      REQUIRE(chi.row(i).sum() == Catch::Approx(1.0).margin(1e-8));
      for (int j = 0; j < 2; ++j)
        REQUIRE(chi(i, j) >= 0.0);
    }
    // States 0,1 share a macrostate; states 2,3 share the other.
    Eigen::Index m0, m1, m2, m3;
    chi.row(0).maxCoeff(&m0);
    chi.row(1).maxCoeff(&m1);
    chi.row(2).maxCoeff(&m2);
    chi.row(3).maxCoeff(&m3);
    REQUIRE(m0 == m1);
    REQUIRE(m2 == m3);
    REQUIRE(m0 != m2);
    for (int i = 0; i < 4; ++i)
      REQUIRE(chi.row(i).maxCoeff() > 1.0 - 1e-8); // exactly crisp
  }

  SECTION("three decoupled blocks with three macrostates") {
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(6, 6);
    T.block(0, 0, 2, 2) << 0.9, 0.1, 0.2, 0.8;
    T.block(2, 2, 2, 2) << 0.6, 0.4, 0.5, 0.5;
    T.block(4, 4, 2, 2) << 0.95, 0.05, 0.05, 0.95;
    Eigen::MatrixXd chi = pcca_memberships(T, 3);
    std::set<Eigen::Index> macro_of_block;
    for (int b = 0; b < 3; ++b) {
      Eigen::Index ma, mb;
      chi.row(2 * b).maxCoeff(&ma);
      chi.row(2 * b + 1).maxCoeff(&mb);
      REQUIRE(ma == mb);
      REQUIRE(chi.row(2 * b).maxCoeff() > 1.0 - 1e-8);
      macro_of_block.insert(ma);
    }
    REQUIRE(macro_of_block.size() == 3);
  }

  SECTION("weak coupling still yields near-crisp memberships") {
    Eigen::MatrixXd T = decoupled_two_block();
    const double eps = 1e-3;
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j)
        if (T(i, j) == 0.0)
          T(i, j) = eps;
      T.row(i) /= T.row(i).sum();
    }
    Eigen::MatrixXd chi = pcca_memberships(T, 2);
    for (int i = 0; i < 4; ++i) {
      REQUIRE(chi.row(i).sum() == Catch::Approx(1.0).margin(1e-8));
      REQUIRE(chi.row(i).maxCoeff() > 0.98);
    }
    Eigen::Index m0, m2;
    chi.row(0).maxCoeff(&m0);
    chi.row(2).maxCoeff(&m2);
    REQUIRE(m0 != m2);
  }

  SECTION("a single macrostate absorbs everything") {
    Eigen::MatrixXd chi = pcca_memberships(decoupled_two_block(), 1);
    REQUIRE(chi == Eigen::MatrixXd::Ones(4, 1));
  }

  SECTION("invalid shapes and counts are rejected") {
    Eigen::MatrixXd T = decoupled_two_block();
    REQUIRE_THROWS_AS(pcca_memberships(T, 0), Error);
    REQUIRE_THROWS_AS(pcca_memberships(T, 5), Error);
    REQUIRE_THROWS_AS(pcca_memberships(Eigen::MatrixXd(0, 0), 1), Error);

    Eigen::MatrixXd transient(2, 2);
    transient << 0.5, 0.5, 0.0, 1.0;
    REQUIRE_THROWS_AS(pcca_memberships(transient, 2), NotIrreducible);
  }
}

TEST_CASE("the macrostate pipeline lumps metastable wells") {
  // A 1D hopping process: long dwells near 0 and near 10 with rare jumps.
  Rng rng(23, 941, 0);
  const int n = 3000;
  Eigen::MatrixXd tics(n, 1);
  double center = 0.0;
  for (int t = 0; t < n; ++t) {
    if (rng.uniform() < 0.01)
      center = 10.0 - center;
    tics(t, 0) = center + 0.5 * rng.normal();
  }

  MacrostateModel model = fit_macrostates(tics, 1, 8, 2, 99);

  REQUIRE(model.kmeans_centers.rows() == 8);
  REQUIRE(model.memberships.rows() == 8);
  REQUIRE(model.memberships.cols() == 2);
  REQUIRE(model.n_macrostates == 2);
  REQUIRE_FALSE(model.kept_clusters.empty());

  SECTION("membership rows are stochastic") {
    for (int c = 0; c < 8; ++c) {
      REQUIRE(model.memberships.row(c).sum() == Catch::Approx(1.0).margin(1e-8));
      for (int j = 0; j < 2; ++j)
        REQUIRE(model.memberships(c, j) >= 0.0);
    }
  }

  SECTION("cluster centers near each well share a macrostate") {
    int macro_low = -1, macro_high = -1;
    for (int c = 0; c < 8; ++c) {
      const double x = model.kmeans_centers(c, 0);
      const int m = model.assignment[static_cast<std::size_t>(c)];
      if (x < 3.0) {
        if (macro_low < 0)
          macro_low = m;
        REQUIRE(m == macro_low);
      } else if (x > 7.0) {
        if (macro_high < 0)
          macro_high = m;
        REQUIRE(m == macro_high);
      }
    }
    REQUIRE(macro_low >= 0);
    REQUIRE(macro_high >= 0);
    REQUIRE(macro_low != macro_high);
  }

  SECTION("the cluster transition matrix is kept-set stochastic") {
    const Eigen::Index m = model.cluster_transition.rows();
    REQUIRE(m == static_cast<Eigen::Index>(model.kept_clusters.size()));
    for (Eigen::Index i = 0; i < m; ++i)
      REQUIRE(model.cluster_transition.row(i).sum() ==
              Catch::Approx(1.0).margin(1e-12));
  }

  SECTION("the same seed reproduces the model exactly") {
    MacrostateModel again = fit_macrostates(tics, 1, 8, 2, 99);
    REQUIRE(again.kmeans_centers == model.kmeans_centers);
    REQUIRE(again.memberships == model.memberships);
    REQUIRE(again.assignment == model.assignment);
  }

  SECTION("segment boundaries do not contribute transitions") {
    // Split so every segment dwells in one well: without cross-segment
    // counting there are no observed hops, leaving decoupled blocks.
    std::vector<Eigen::MatrixXd> segs;
    Eigen::MatrixXd low(100, 1), high(100, 1);
    for (int t = 0; t < 100; ++t) {
      low(t, 0) = 0.5 * rng.normal();
      high(t, 0) = 10.0 + 0.5 * rng.normal();
    }
    segs.push_back(low);
    segs.push_back(high);
    MacrostateModel split = fit_macrostates(segs, 1, 4, 2, 7);
    for (int c = 0; c < 4; ++c)
      REQUIRE(split.memberships.row(c).maxCoeff() > 1.0 - 1e-8);
  }

  SECTION("too few frames for the requested clusters") {
    REQUIRE_THROWS_AS(fit_macrostates(tics.topRows(5), 1, 8, 2, 0),
                      TooFewFrames);
  }
}
