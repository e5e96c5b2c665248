// Independent reference computations used to check the library. Each oracle
// takes a different algorithmic route than the code under test: Gram-matrix
// eigendecomposition instead of bidiagonalization, exhaustive enumeration
// instead of Lloyd iterations, full-QR complements instead of projections,
// and a rotation-angle grid instead of the Procrustes solution.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "bicluster/prng.hpp"

namespace oracles {

/// Singular values of M via the eigendecomposition of the smaller Gram
/// matrix. Descending, same count as min(m, n).
inline Eigen::VectorXd gram_singular_values(const Eigen::MatrixXd& m) {
    const bool tall = m.rows() >= m.cols();
    Eigen::MatrixXd gram = tall ? Eigen::MatrixXd(m.transpose() * m)
                                : Eigen::MatrixXd(m * m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    Eigen::VectorXd lambda = eig.eigenvalues(); // ascending
    Eigen::VectorXd values(lambda.size());
    for (Eigen::Index i = 0; i < lambda.size(); ++i)
        values(i) = std::sqrt(std::max(0.0, lambda(lambda.size() - 1 - i)));
    return values;
}

/// Weighted within-cluster sum of squares of a fixed assignment, accumulated
/// directly from the definition.
inline double weighted_wcss(const Eigen::MatrixXd& points, const Eigen::VectorXd& weights,
                            const std::vector<int>& labels, int parts) {
    double total = 0.0;
    for (int c = 0; c < parts; ++c) {
        Eigen::RowVectorXd center = Eigen::RowVectorXd::Zero(points.cols());
        double mass = 0.0;
        for (Eigen::Index i = 0; i < points.rows(); ++i)
            if (labels[static_cast<std::size_t>(i)] == c) {
                center += weights(i) * points.row(i);
                mass += weights(i);
            }
        if (mass == 0.0) continue;
        center /= mass;
        for (Eigen::Index i = 0; i < points.rows(); ++i)
            if (labels[static_cast<std::size_t>(i)] == c)
                total += weights(i) * (points.row(i) - center).squaredNorm();
    }
    return total;
}

/// Exhaustive minimum of the weighted k-partition objective over all label
/// vectors. Feasible for n <= 12ish with k <= 3.
inline double brute_force_kvariance(const Eigen::MatrixXd& points, const Eigen::VectorXd& weights,
                                    int k) {
    const auto n = static_cast<std::size_t>(points.rows());
    std::vector<int> labels(n, 0);
    double best = std::numeric_limits<double>::infinity();
    while (true) {
        best = std::min(best, weighted_wcss(points, weights, labels, k));
        std::size_t pos = n;
        while (pos > 0) {
            --pos;
            if (labels[pos] + 1 < k) {
                ++labels[pos];
                std::fill(labels.begin() + static_cast<std::ptrdiff_t>(pos) + 1, labels.end(), 0);
                break;
            }
            if (pos == 0) return best;
        }
    }
}

/// Distance of each column of `vectors` to span(basis) via the orthogonal
/// complement from a full QR factorization.
inline Eigen::VectorXd qr_complement_distances(const Eigen::MatrixXd& vectors,
                                               const Eigen::MatrixXd& basis) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis);
    Eigen::MatrixXd q = qr.householderQ();
    Eigen::MatrixXd complement = q.rightCols(basis.rows() - basis.cols());
    Eigen::VectorXd out(vectors.cols());
    for (Eigen::Index i = 0; i < vectors.cols(); ++i)
        out(i) = (complement.transpose() * vectors.col(i)).norm();
    return out;
}

/// Minimum of ||Y - V' R||_F^2 over orthogonal 2x2 matrices R, by scanning
/// the rotation angle over both components of O(2) and refining the grid.
inline double rotation_grid_align_error(const Eigen::MatrixXd& y, const Eigen::MatrixXd& vprime) {
    auto error_at = [&](double theta, bool reflect) {
        const double c = std::cos(theta), s = std::sin(theta);
        Eigen::Matrix2d r;
        if (reflect)
            r << c, s, s, -c;
        else
            r << c, -s, s, c;
        return (y - vprime * r).squaredNorm();
    };
    double best = std::numeric_limits<double>::infinity();
    for (int reflect = 0; reflect < 2; ++reflect) {
        double lo = 0.0, hi = 2.0 * std::numbers::pi;
        double center = 0.0;
        for (int level = 0; level < 8; ++level) {
            const int steps = 400;
            double best_here = std::numeric_limits<double>::infinity();
            for (int i = 0; i <= steps; ++i) {
                double theta = lo + (hi - lo) * i / steps;
                double e = error_at(theta, reflect != 0);
                if (e < best_here) {
                    best_here = e;
                    center = theta;
                }
            }
            double width = (hi - lo) / steps;
            lo = center - 2 * width;
            hi = center + 2 * width;
            best = std::min(best, best_here);
        }
    }
    return best;
}

/// Random orthonormal m-by-k matrix (QR of a Gaussian draw).
inline Eigen::MatrixXd random_orthonormal(Eigen::Index m, Eigen::Index k, bicluster::Rng& rng) {
    Eigen::MatrixXd g(m, k);
    for (Eigen::Index j = 0; j < k; ++j)
        for (Eigen::Index i = 0; i < m; ++i) g(i, j) = rng.gaussian(1.0);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    return qr.householderQ() * Eigen::MatrixXd::Identity(m, k);
}

inline Eigen::MatrixXd random_matrix(Eigen::Index m, Eigen::Index n, bicluster::Rng& rng,
                                     double lo = -1.0, double hi = 1.0) {
    Eigen::MatrixXd out(m, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < m; ++i) out(i, j) = lo + (hi - lo) * rng.uniform01();
    return out;
}

} // namespace oracles
