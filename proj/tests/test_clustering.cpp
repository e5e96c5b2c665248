#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "bicluster/clustering.hpp"
#include "bicluster/model.hpp"
#include "oracles.hpp"

using namespace bicluster;

TEST_CASE("representatives read vector rows", "[clustering]") {
    SECTION("identity gives orthogonal rows") {
        auto svd = thin_svd(Eigen::MatrixXd::Identity(2, 2), 2);
        auto rep = representatives(svd, Side::Left, 2);
        REQUIRE(rep.size() == 2);
        REQUIRE(rep.dimension() == 2);
        REQUIRE((rep.points() * rep.points().transpose())
                    .isApprox(Eigen::MatrixXd::Identity(2, 2), 1e-12));
        REQUIRE(rep.weights().isConstant(1.0));
    }
    SECTION("blown-up matrix yields one point per block") {
        PatternMatrix p((Eigen::MatrixXd(2, 2) << 0.9, 0.1, 0.2, 0.7).finished());
        BlockStructure bs({5, 7}, {4, 6});
        auto svd = exact_blownup_svd(p, bs);
        auto rep = representatives(svd, Side::Left, svd.count());
        auto labels = bs.row_labels();
        for (Index i = 1; i < rep.size(); ++i) {
            const bool same_block =
                labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(i - 1)];
            REQUIRE((rep.points().row(i) == rep.points().row(i - 1)) == same_block);
        }
    }
    SECTION("k out of range") {
        auto svd = thin_svd(Eigen::MatrixXd::Identity(3, 3), 2);
        REQUIRE_THROWS_AS(representatives(svd, Side::Right, 3), ParameterError);
    }
}

TEST_CASE("structural variance", "[clustering]") {
    SECTION("identical points") {
        Representation rep(Eigen::MatrixXd::Constant(5, 2, 3.0));
        REQUIRE(structural_variance(rep, {0, 0, 1, 0, 1}) == 0.0);
    }
    SECTION("two points in one cluster") {
        Eigen::MatrixXd pts(2, 1);
        pts << 0.0, 2.0;
        REQUIRE(structural_variance(Representation(pts), {0, 0}) == Catch::Approx(2.0));
    }
    SECTION("random partition matches the direct formula") {
        Rng rng(71);
        Eigen::MatrixXd pts = oracles::random_matrix(20, 3, rng);
        Eigen::VectorXd w(20);
        for (Index i = 0; i < 20; ++i) w(i) = 0.1 + rng.uniform01();
        std::vector<int> labels;
        for (int i = 0; i < 20; ++i) labels.push_back(static_cast<int>(rng.index(4)));
        const double got = structural_variance(Representation(pts, w), labels);
        const double want = oracles::weighted_wcss(pts, w, labels, 4);
        REQUIRE(got == Catch::Approx(want).margin(1e-12));
    }
    SECTION("empty clusters contribute nothing") {
        Eigen::MatrixXd pts(2, 1);
        pts << 1.0, 5.0;
        REQUIRE(structural_variance(Representation(pts), {0, 3}) ==
                structural_variance(Representation(pts), {0, 1}));
    }
}

TEST_CASE("kmeans on exactly separable data", "[clustering]") {
    SECTION("points at k distinct locations") {
        Eigen::MatrixXd pts(6, 2);
        pts << 0, 0, 0, 0, 5, 5, 5, 5, -3, 4, -3, 4;
        auto clus = kmeans(Representation(pts), 3, 1, 5);
        REQUIRE(clus.within_variance == 0.0);
        REQUIRE(same_partition(clus.assignment, {0, 0, 1, 1, 2, 2}));
        REQUIRE_FALSE(clus.degenerate);
    }
    SECTION("k = 1 returns the weighted mean and total scatter") {
        Eigen::MatrixXd pts(3, 1);
        pts << 0.0, 1.0, 5.0;
        Eigen::VectorXd w(3);
        w << 1.0, 2.0, 1.0;
        auto clus = kmeans(Representation(pts, w), 1, 1, 1);
        const double mean = (0.0 + 2.0 + 5.0) / 4.0;
        REQUIRE(clus.centers(0, 0) == Catch::Approx(mean));
        const double want = 1.0 * mean * mean + 2.0 * std::pow(1.0 - mean, 2) +
                            std::pow(5.0 - mean, 2);
        REQUIRE(clus.within_variance == Catch::Approx(want));
    }
}

TEST_CASE("kmeans equals exhaustive search on tight instances", "[clustering]") {
    Eigen::MatrixXd pts(8, 2);
    pts << 0.0, 0.1, 0.1, 0.0, -0.1, 0.05, 0.05, -0.05, 4.0, 4.1, 4.1, 3.9, 3.95, 4.0, 4.05, 4.05;
    auto clus = kmeans(Representation(pts), 2, 3, 10);
    const double best = oracles::brute_force_kvariance(pts, Eigen::VectorXd::Ones(8), 2);
    REQUIRE(clus.within_variance == Catch::Approx(best).margin(1e-9));
    REQUIRE(same_partition(clus.assignment, {0, 0, 0, 0, 1, 1, 1, 1}));
}

TEST_CASE("kmeans properties", "[clustering]") {
    SECTION("deterministic in (seed, restarts)") {
        Rng rng(81);
        Eigen::MatrixXd pts = oracles::random_matrix(40, 2, rng);
        auto a = kmeans(Representation(pts), 3, 7, 5);
        auto b = kmeans(Representation(pts), 3, 7, 5);
        REQUIRE(a.assignment == b.assignment);
        REQUIRE(a.centers == b.centers);
        REQUIRE(a.within_variance == b.within_variance);
    }
    SECTION("labels are canonical: first occurrences increase") {
        Rng rng(82);
        Eigen::MatrixXd pts = oracles::random_matrix(30, 2, rng);
        auto clus = kmeans(Representation(pts), 4, 9, 8);
        int seen = 0;
        for (int l : clus.assignment) {
            REQUIRE(l <= seen);
            if (l == seen) ++seen;
        }
    }
    SECTION("objective equals structural variance of the assignment") {
        Rng rng(83);
        Eigen::MatrixXd pts = oracles::random_matrix(25, 3, rng);
        Eigen::VectorXd w(25);
        for (Index i = 0; i < 25; ++i) w(i) = 0.5 + rng.uniform01();
        Representation rep(pts, w);
        auto clus = kmeans(rep, 3, 11, 6);
        REQUIRE(clus.within_variance ==
                Catch::Approx(structural_variance(rep, clus.assignment)).margin(1e-10));
    }
    SECTION("centers are stationary weighted means") {
        Rng rng(84);
        Eigen::MatrixXd pts = oracles::random_matrix(30, 2, rng);
        Eigen::VectorXd w(30);
        for (Index i = 0; i < 30; ++i) w(i) = 0.5 + rng.uniform01();
        Representation rep(pts, w);
        auto clus = kmeans(rep, 3, 13, 4);
        for (int c = 0; c < 3; ++c) {
            Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(2);
            double mass = 0.0;
            for (Index i = 0; i < 30; ++i)
                if (clus.assignment[static_cast<std::size_t>(i)] == c) {
                    mean += w(i) * pts.row(i);
                    mass += w(i);
                }
            REQUIRE(mass > 0.0);
            REQUIRE((clus.centers.row(c) - mean / mass).norm() <= 1e-12);
        }
    }
    SECTION("more clusters than distinct points is degenerate") {
        Eigen::MatrixXd pts = Eigen::MatrixXd::Zero(4, 2);
        auto clus = kmeans(Representation(pts), 2, 1, 3);
        REQUIRE(clus.degenerate);
        REQUIRE(clus.within_variance == 0.0);
    }
    SECTION("parameter validation") {
        Representation rep(Eigen::MatrixXd::Zero(3, 2));
        REQUIRE_THROWS_AS(kmeans(rep, 4, 1, 1), ParameterError);
        REQUIRE_THROWS_AS(kmeans(rep, 0, 1, 1), ParameterError);
        REQUIRE_THROWS_AS(kmeans(rep, 2, 1, 0), ParameterError);
    }
}

TEST_CASE("kmeans objective never beats the planted partition from above", "[clustering]") {
    // the found minimum is at most the variance evaluated at the truth
    Rng rng(85);
    PatternMatrix p((Eigen::MatrixXd(2, 3) << 0.8, 0.2, 0.8, 0.2, 0.8, 0.8).finished());
    BlockStructure bs({40, 40}, {30, 30, 20});
    Eigen::MatrixXd planted = blow_up(p, bs);
    for (int trial = 0; trial < 3; ++trial) {
        Eigen::MatrixXd noisy =
            planted + sample_noise(80, 80, NoiseSpec::uniform(0.4, 900 + trial));
        auto svd = thin_svd(noisy, 2);
        auto rep = representatives(svd, Side::Left, 2);
        auto clus = kmeans(rep, 2, 55, 10);
        const std::vector<int> planted_labels = bs.row_labels();
        REQUIRE(clus.within_variance <= structural_variance(rep, planted_labels) + 1e-12);
    }
}

TEST_CASE("cluster count heuristic finds planted block counts", "[clustering]") {
    SECTION("exact representatives of a blown-up matrix stop at the true count") {
        PatternMatrix p((Eigen::MatrixXd(3, 2) << 0.9, 0.1, 0.1, 0.9, 0.5, 0.5).finished());
        BlockStructure bs({10, 12, 8}, {15, 15});
        auto svd = exact_blownup_svd(p, bs);
        auto rows = representatives(svd, Side::Left, svd.count());
        REQUIRE(suggest_cluster_count(rows, static_cast<int>(svd.count()), 8, 5) == 3);
        auto cols = representatives(svd, Side::Right, svd.count());
        REQUIRE(suggest_cluster_count(cols, static_cast<int>(svd.count()), 8, 5) == 2);
    }
    SECTION("representatives from a dense decomposition carry only fp jitter") {
        PatternMatrix p((Eigen::MatrixXd(3, 2) << 0.9, 0.1, 0.1, 0.9, 0.5, 0.5).finished());
        BlockStructure bs({10, 12, 8}, {15, 15});
        auto svd = thin_svd(blow_up(p, bs), 2);
        REQUIRE(suggest_cluster_count(representatives(svd, Side::Left, 2), 2, 8, 5) == 3);
    }
    SECTION("exact fit stops immediately") {
        Eigen::MatrixXd two(8, 1);
        two << 0, 0, 0, 0, 9, 9, 9, 9;
        REQUIRE(suggest_cluster_count(Representation(two), 1, 6, 5) == 2);
    }
    SECTION("bounds are validated") {
        Representation rep(Eigen::MatrixXd::Zero(5, 2));
        REQUIRE_THROWS_AS(suggest_cluster_count(rep, 0, 3, 1), ParameterError);
        REQUIRE_THROWS_AS(suggest_cluster_count(rep, 3, 2, 1), ParameterError);
        REQUIRE_THROWS_AS(suggest_cluster_count(rep, 1, 6, 1), ParameterError);
    }
}

TEST_CASE("same_partition ignores label names only", "[clustering]") {
    REQUIRE(same_partition({0, 0, 1}, {1, 1, 0}));
    REQUIRE_FALSE(same_partition({0, 0, 1}, {0, 1, 1}));
    REQUIRE_FALSE(same_partition({0, 0}, {0, 0, 0}));
    REQUIRE(same_partition({}, {}));
}
