#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bicluster/errors.hpp"
#include "bicluster/prng.hpp"
#include "bicluster/spectra.hpp"

namespace bicluster {

/// Points to be clustered, one per row, with strictly positive weights.
/// Unit weights give the plain Euclidean setting; degree weights give the
/// correspondence setting.
class Representation {
public:
    explicit Representation(Eigen::MatrixXd points)
        : Representation(std::move(points), Eigen::VectorXd()) {}

    Representation(Eigen::MatrixXd points, Eigen::VectorXd weights)
        : points_(std::move(points)), weights_(std::move(weights)) {
        if (points_.rows() < 1) throw StructuralError("representation needs at least one point");
        if (!points_.allFinite()) throw DataError("representation has non-finite coordinates");
        if (weights_.size() == 0) weights_ = Eigen::VectorXd::Ones(points_.rows());
        if (weights_.size() != points_.rows())
            throw StructuralError("weights length does not match the number of points");
        if (!((weights_.array() > 0.0).all() && weights_.allFinite()))
            throw DataError("weights must be positive and finite");
    }

    const Eigen::MatrixXd& points() const { return points_; }
    const Eigen::VectorXd& weights() const { return weights_; }
    Index size() const { return points_.rows(); }
    Index dimension() const { return points_.cols(); }

private:
    Eigen::MatrixXd points_;
    Eigen::VectorXd weights_;
};

enum class Side { Left, Right };

/// Rows of the chosen singular-vector matrix, truncated to k coordinates,
/// with unit weights: the k-dimensional representatives of the row (Left)
/// or column (Right) items.
inline Representation representatives(const SvdResult& svd, Side side, Index k) {
    const Eigen::MatrixXd& vectors = side == Side::Left ? svd.left : svd.right;
    if (k < 1 || k > vectors.cols())
        throw ParameterError("representatives: k exceeds the number of computed triplets");
    return Representation(vectors.leftCols(k));
}

/// A k-partition with its centers and weighted within-cluster sum of squared
/// distances. Labels are 0-based and renumbered by first occurrence.
struct Clustering {
    std::vector<int> assignment;
    Eigen::MatrixXd centers; ///< k-by-dim, row i = weighted mean of cluster i
    double within_variance = 0.0;
    bool degenerate = false; ///< some cluster ended empty (fewer distinct points than k)
};

/// Weighted within-cluster sum of squares at a fixed partition, with centers
/// at the weighted means. Empty clusters contribute zero. This evaluates the
/// variance objective at any partition, so it upper-bounds the k-variance.
inline double structural_variance(const Representation& rep, const std::vector<int>& labels) {
    if (static_cast<Index>(labels.size()) != rep.size())
        throw StructuralError("label count does not match the number of points");
    int parts = 0;
    for (int l : labels) {
        if (l < 0) throw ParameterError("labels must be nonnegative");
        parts = std::max(parts, l + 1);
    }
    const auto& x = rep.points();
    const auto& w = rep.weights();
    Eigen::MatrixXd centers = Eigen::MatrixXd::Zero(parts, rep.dimension());
    Eigen::VectorXd mass = Eigen::VectorXd::Zero(parts);
    for (Index i = 0; i < rep.size(); ++i) {
        centers.row(labels[static_cast<std::size_t>(i)]) += w(i) * x.row(i);
        mass(labels[static_cast<std::size_t>(i)]) += w(i);
    }
    for (int c = 0; c < parts; ++c)
        if (mass(c) > 0.0) centers.row(c) /= mass(c);
    double total = 0.0;
    for (Index i = 0; i < rep.size(); ++i)
        total += w(i) * (x.row(i) - centers.row(labels[static_cast<std::size_t>(i)])).squaredNorm();
    return total;
}

namespace detail {

struct LloydRun {
    std::vector<int> labels;
    Eigen::MatrixXd centers;
    double objective = std::numeric_limits<double>::infinity();
    bool degenerate = false;
};

/// Weighted k-means++ seeding: first center drawn by weight, later centers by
/// weight times squared distance to the nearest chosen center.
inline Eigen::MatrixXd seed_centers(const Representation& rep, int k, Rng& rng) {
    const auto& x = rep.points();
    const auto& w = rep.weights();
    const Index n = rep.size();
    Eigen::MatrixXd centers(k, rep.dimension());
    Eigen::VectorXd dist2 = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());

    auto pick = [&](const Eigen::VectorXd& mass) -> Index {
        double total = mass.sum();
        if (!(total > 0.0)) return static_cast<Index>(rng.index(static_cast<std::size_t>(n)));
        double u = rng.uniform01() * total;
        double acc = 0.0;
        for (Index i = 0; i < n; ++i) {
            acc += mass(i);
            if (u < acc) return i;
        }
        return n - 1;
    };

    centers.row(0) = x.row(pick(w));
    for (int c = 1; c < k; ++c) {
        for (Index i = 0; i < n; ++i)
            dist2(i) = std::min(dist2(i), (x.row(i) - centers.row(c - 1)).squaredNorm());
        centers.row(c) = x.row(pick(w.cwiseProduct(dist2)));
    }
    return centers;
}

inline LloydRun lloyd(const Representation& rep, int k, std::uint64_t seed, int max_iters,
                      double rel_tol) {
    const auto& x = rep.points();
    const auto& w = rep.weights();
    const Index n = rep.size();
    Rng rng(seed);

    LloydRun run;
    run.centers = seed_centers(rep, k, rng);
    run.labels.assign(static_cast<std::size_t>(n), 0);
    Eigen::VectorXd mass(k);

    double prev = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < max_iters; ++iter) {
        // assignment step: nearest center, lowest index wins ties
        for (Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = (x.row(i) - run.centers.row(0)).squaredNorm();
            for (int c = 1; c < k; ++c) {
                double d = (x.row(i) - run.centers.row(c)).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            run.labels[static_cast<std::size_t>(i)] = best;
        }

        // re-seed any emptied cluster at the point farthest from its center
        bool reseeded = false;
        while (true) {
            mass.setZero();
            for (Index i = 0; i < n; ++i) mass(run.labels[static_cast<std::size_t>(i)]) += w(i);
            int empty = -1;
            for (int c = 0; c < k; ++c)
                if (mass(c) == 0.0) {
                    empty = c;
                    break;
                }
            if (empty < 0) break;
            Index far = -1;
            double far_d = -1.0;
            for (Index i = 0; i < n; ++i) {
                double d = (x.row(i) - run.centers.row(run.labels[static_cast<std::size_t>(i)]))
                               .squaredNorm();
                if (d > far_d && mass(run.labels[static_cast<std::size_t>(i)]) > w(i)) {
                    far_d = d;
                    far = i;
                }
            }
            if (far < 0 || far_d <= 0.0) {
                run.degenerate = true; // fewer distinct points than clusters
                break;
            }
            run.labels[static_cast<std::size_t>(far)] = empty;
            reseeded = true;
        }

        // update step: weighted means
        run.centers.setZero();
        mass.setZero();
        for (Index i = 0; i < n; ++i) {
            run.centers.row(run.labels[static_cast<std::size_t>(i)]) += w(i) * x.row(i);
            mass(run.labels[static_cast<std::size_t>(i)]) += w(i);
        }
        for (int c = 0; c < k; ++c)
            if (mass(c) > 0.0) run.centers.row(c) /= mass(c);

        double objective = 0.0;
        for (Index i = 0; i < n; ++i)
            objective +=
                w(i) * (x.row(i) - run.centers.row(run.labels[static_cast<std::size_t>(i)])).squaredNorm();
        // a re-seed intentionally perturbs the objective; plain iterations are monotone
        assert(reseeded || objective <= prev * (1.0 + 1e-12) + 1e-300);

        run.objective = objective;
        if (!reseeded && (prev - objective < rel_tol * std::max(prev, 1e-300) || objective == 0.0))
            break;
        prev = reseeded ? std::numeric_limits<double>::infinity() : objective;
    }
    return run;
}

/// Renumber labels by first occurrence and reorder centers to match; clusters
/// that never occur keep their centers after the occupied ones.
inline void canonicalize(LloydRun& run, int k) {
    std::vector<int> remap(static_cast<std::size_t>(k), -1);
    int next = 0;
    for (int& l : run.labels) {
        if (remap[static_cast<std::size_t>(l)] < 0) remap[static_cast<std::size_t>(l)] = next++;
        l = remap[static_cast<std::size_t>(l)];
    }
    for (int c = 0; c < k; ++c)
        if (remap[static_cast<std::size_t>(c)] < 0) remap[static_cast<std::size_t>(c)] = next++;
    Eigen::MatrixXd centers(run.centers.rows(), run.centers.cols());
    for (int c = 0; c < k; ++c) centers.row(remap[static_cast<std::size_t>(c)]) = run.centers.row(c);
    run.centers = centers;
}

} // namespace detail

/// Weighted k-means: best of `restarts` seeded k-means++ / Lloyd runs,
/// deterministic in (seed, restarts). Ties between runs keep the earlier run.
inline Clustering kmeans(const Representation& rep, int k, std::uint64_t seed, int restarts = 10) {
    if (k < 1 || static_cast<Index>(k) > rep.size())
        throw ParameterError("kmeans: need 1 <= k <= number of points");
    if (restarts < 1) throw ParameterError("kmeans: restarts must be >= 1");

    constexpr int kMaxIters = 300;
    constexpr double kRelTol = 1e-9;
    detail::LloydRun best;
    for (int r = 0; r < restarts; ++r) {
        auto run = detail::lloyd(rep, k, derive_seed(seed, {static_cast<std::uint64_t>(r)}),
                                 kMaxIters, kRelTol);
        if (run.objective < best.objective) best = std::move(run);
    }
    detail::canonicalize(best, k);

    Clustering out;
    out.assignment = std::move(best.labels);
    out.centers = std::move(best.centers);
    out.degenerate = best.degenerate;
    out.within_variance = structural_variance(rep, out.assignment);
    return out;
}

/// Heuristic choice of the cluster count, outside the theory: the smallest
/// count in [k_min, k_max] whose next split improves the objective by less
/// than 10% relative. Variances below 1e-12 of the starting level count as
/// exact fits and win immediately. Reliable for near-piecewise-constant
/// representations; on diffuse clouds every split keeps gaining and the scan
/// runs to k_max.
inline int suggest_cluster_count(const Representation& rep, int k_min, int k_max,
                                 std::uint64_t seed, int restarts = 10) {
    if (k_min < 1 || k_max < k_min || static_cast<Index>(k_max) > rep.size())
        throw ParameterError("suggest_cluster_count: need 1 <= k_min <= k_max <= points");
    double current = kmeans(rep, k_min, derive_seed(seed, {static_cast<std::uint64_t>(k_min)}),
                            restarts)
                         .within_variance;
    // variances this far below the total scatter are numerically perfect fits
    const double total_scatter =
        structural_variance(rep, std::vector<int>(static_cast<std::size_t>(rep.size()), 0));
    const double exact_fit = 1e-12 * std::max(total_scatter, 1e-300);
    for (int k = k_min; k < k_max; ++k) {
        if (current <= exact_fit) return k;
        double next = kmeans(rep, k + 1, derive_seed(seed, {static_cast<std::uint64_t>(k + 1)}),
                             restarts)
                          .within_variance;
        if ((current - next) / current < 0.10) return k;
        current = next;
    }
    return k_max;
}

/// True when the two label vectors induce the same partition, ignoring label
/// names.
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) return false;
    std::vector<int> a_to_b, b_to_a;
    for (std::size_t i = 0; i < a.size(); ++i) {
        auto la = static_cast<std::size_t>(a[i]), lb = static_cast<std::size_t>(b[i]);
        if (la >= a_to_b.size()) a_to_b.resize(la + 1, -1);
        if (lb >= b_to_a.size()) b_to_a.resize(lb + 1, -1);
        if (a_to_b[la] < 0) a_to_b[la] = b[i];
        if (b_to_a[lb] < 0) b_to_a[lb] = a[i];
        if (a_to_b[la] != b[i] || b_to_a[lb] != a[i]) return false;
    }
    return true;
}

} // namespace bicluster
