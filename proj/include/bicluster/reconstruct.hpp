#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "bicluster/clustering.hpp"
#include "bicluster/errors.hpp"
#include "bicluster/spectra.hpp"

namespace bicluster {

namespace detail {

inline double gram_deviation(const Eigen::MatrixXd& q) {
    return (q.transpose() * q - Eigen::MatrixXd::Identity(q.cols(), q.cols()))
        .cwiseAbs()
        .maxCoeff();
}

/// Orthogonal k-by-k factor R minimizing ||Y - V' R||_F over orthogonal
/// matrices: with Y^T V' = Q S Z^T, R = Z Q^T.
inline Eigen::MatrixXd procrustes_rotation(const Eigen::MatrixXd& y, const Eigen::MatrixXd& vprime) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(y.transpose() * vprime,
                                          Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixV() * svd.matrixU().transpose();
}

} // namespace detail

/// Euclidean distance of each column of `vectors` to the span of the
/// orthonormal columns of `basis`.
inline Eigen::VectorXd subspace_distances(const Eigen::MatrixXd& vectors,
                                          const Eigen::MatrixXd& basis) {
    if (vectors.rows() != basis.rows())
        throw StructuralError("subspace_distances: dimension mismatch");
    if (detail::gram_deviation(basis) > 1e-6)
        throw DataError("subspace_distances: basis columns are not orthonormal");
    Eigen::VectorXd out(vectors.cols());
    for (Index i = 0; i < vectors.cols(); ++i) {
        Eigen::VectorXd y = vectors.col(i);
        out(i) = (y - basis * (basis.transpose() * y)).norm();
    }
    return out;
}

/// The orthonormal system inside span(F_basis) closest in total squared
/// distance to the orthonormal columns of Y. The minimum is attained by an
/// orthogonal rotation of F_basis and never exceeds twice the total squared
/// subspace distance of Y's columns.
inline Eigen::MatrixXd align_orthonormal(const Eigen::MatrixXd& y, const Eigen::MatrixXd& f_basis) {
    if (y.rows() != f_basis.rows() || y.cols() != f_basis.cols())
        throw StructuralError("align_orthonormal: shape mismatch");
    if (detail::gram_deviation(f_basis) > 1e-6)
        throw StructuralError("align_orthonormal: F_basis is rank-deficient or not orthonormal");
    if (detail::gram_deviation(y) > 1e-6)
        throw DataError("align_orthonormal: Y columns are not orthonormal");
    return f_basis * detail::procrustes_rotation(y, f_basis);
}

/// Rank-k blown up approximation of a noisy matrix, with the partitions and
/// alignment diagnostics of the build.
struct ReconstructionResult {
    Eigen::MatrixXd b_hat;        ///< exactly constant on each found block
    double residual_norm = 0.0;   ///< spectral norm of A - b_hat
    std::vector<int> row_partition, col_partition;
    Eigen::MatrixXd aligned_left;  ///< V, m-by-k orthonormal, constant per row cluster
    Eigen::MatrixXd aligned_right; ///< U, n-by-k orthonormal, constant per column cluster
    double left_alignment_error = 0.0;  ///< sum_i ||y_i - v_i||^2
    double right_alignment_error = 0.0; ///< sum_i ||x_i - u_i||^2
    Eigen::VectorXd values;             ///< z_1..z_k of A
    double trailing_value = 0.0;        ///< z_{k+1} of A, 0 when k = min(m, n)
    std::vector<Index> row_order, col_order; ///< index permutations grouping the clusters
    bool weak_gap = false; ///< z_{k+1} within 1% of z_k: the gap hypothesis is doubtful
};

namespace detail {

struct ClusterBasis {
    Eigen::MatrixXd coeffs;      ///< clusters-by-k; basis column t is coeffs(c, t)/sqrt(size_c) on cluster c
    Eigen::VectorXd inv_sqrt_sz; ///< 1/sqrt(cluster size), 0 for empty clusters
    std::vector<int> labels;
};

/// Orthonormal basis of the span of the piecewise-constant matrix whose row j
/// equals centers(labels[j], :). Work happens on the small cluster-level
/// matrix, so the expansion is exactly constant within each cluster.
inline ClusterBasis cluster_span_basis(const Eigen::MatrixXd& centers,
                                       const std::vector<int>& labels, int k,
                                       const char* side_name) {
    const int clusters = static_cast<int>(centers.rows());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(clusters);
    for (int l : labels) counts(l) += 1.0;

    // rows scaled by sqrt(cluster size) make the small matrix share the
    // Gram structure of the full piecewise-constant matrix
    Eigen::MatrixXd scaled = centers;
    for (int c = 0; c < clusters; ++c) scaled.row(c) *= std::sqrt(counts(c));

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(scaled);
    if (qr.rank() < k)
        throw StructuralError(std::string("reconstruct: ") + side_name +
                              " cluster centers span fewer than k dimensions");
    ClusterBasis out;
    out.coeffs = qr.householderQ() * Eigen::MatrixXd::Identity(clusters, k);
    out.inv_sqrt_sz = counts.unaryExpr([](double c) { return c > 0.0 ? 1.0 / std::sqrt(c) : 0.0; });
    out.labels = labels;
    return out;
}

inline Eigen::MatrixXd expand_cluster_matrix(const ClusterBasis& basis,
                                             const Eigen::MatrixXd& coeffs, Index n_rows) {
    Eigen::MatrixXd out(n_rows, coeffs.cols());
    for (Index i = 0; i < n_rows; ++i) {
        const int c = basis.labels[static_cast<std::size_t>(i)];
        out.row(i) = coeffs.row(c) * basis.inv_sqrt_sz(c);
    }
    return out;
}

inline std::vector<Index> grouping_order(const std::vector<int>& labels) {
    std::vector<Index> order(labels.size());
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) {
        return labels[static_cast<std::size_t>(i)] < labels[static_cast<std::size_t>(j)];
    });
    return order;
}

} // namespace detail

/// Rebuilds a blown up matrix behind A from its k leading singular triplets:
/// cluster the row and column representatives (a and b groups), replace each
/// representative by its cluster center, orthonormalize the resulting spans,
/// rotate them onto the singular vectors, and assemble sum_i z_i v_i u_i^T.
inline ReconstructionResult reconstruct(const Eigen::MatrixXd& a_mat, int k, int a, int b,
                                        std::uint64_t seed, int restarts = 10) {
    const Index m = a_mat.rows(), n = a_mat.cols();
    if (k < 1)
        throw ParameterError("reconstruct: no protruding structure (k must be >= 1)");
    if (k > std::min(a, b))
        throw ParameterError("reconstruct: needs a >= k and b >= k");
    if (a > m || b > n)
        throw ParameterError("reconstruct: more clusters than rows or columns");

    const Index kk = std::min<Index>(k + 1, std::min(m, n));
    SvdResult svd = thin_svd(a_mat, kk);
    ReconstructionResult out;
    out.values = svd.values.head(k);
    out.trailing_value = kk > k ? svd.values(k) : 0.0;
    out.weak_gap = out.trailing_value >= 0.99 * svd.values(k - 1);

    const Eigen::MatrixXd y = svd.left.leftCols(k);  // row representatives as rows
    const Eigen::MatrixXd x = svd.right.leftCols(k); // column representatives as rows

    Clustering rows = kmeans(Representation(y), a, derive_seed(seed, {0}), restarts);
    Clustering cols = kmeans(Representation(x), b, derive_seed(seed, {1}), restarts);

    auto row_basis = detail::cluster_span_basis(rows.centers, rows.assignment, k, "row");
    auto col_basis = detail::cluster_span_basis(cols.centers, cols.assignment, k, "column");

    // Procrustes rotation against the expanded orthonormal spans
    Eigen::MatrixXd v_prime = detail::expand_cluster_matrix(row_basis, row_basis.coeffs, m);
    Eigen::MatrixXd u_prime = detail::expand_cluster_matrix(col_basis, col_basis.coeffs, n);
    Eigen::MatrixXd r_left = detail::procrustes_rotation(y, v_prime);
    Eigen::MatrixXd r_right = detail::procrustes_rotation(x, u_prime);

    Eigen::MatrixXd v_coeffs = row_basis.coeffs * r_left;  // cluster-level V
    Eigen::MatrixXd u_coeffs = col_basis.coeffs * r_right; // cluster-level U
    out.aligned_left = detail::expand_cluster_matrix(row_basis, v_coeffs, m);
    out.aligned_right = detail::expand_cluster_matrix(col_basis, u_coeffs, n);
    out.left_alignment_error = (y - out.aligned_left).squaredNorm();
    out.right_alignment_error = (x - out.aligned_right).squaredNorm();

    // cell values once per (row cluster, column cluster), then fill: b_hat is
    // exactly constant on every cell by construction
    Eigen::MatrixXd cell = v_coeffs * out.values.asDiagonal() * u_coeffs.transpose(); // a-by-b
    for (int c = 0; c < a; ++c) cell.row(c) *= row_basis.inv_sqrt_sz(c);
    for (int c = 0; c < b; ++c) cell.col(c) *= col_basis.inv_sqrt_sz(c);
    out.b_hat.resize(m, n);
    for (Index j = 0; j < n; ++j) {
        const int cj = cols.assignment[static_cast<std::size_t>(j)];
        for (Index i = 0; i < m; ++i)
            out.b_hat(i, j) = cell(rows.assignment[static_cast<std::size_t>(i)], cj);
    }

    out.residual_norm = spectral_norm(a_mat - out.b_hat);
    out.row_partition = rows.assignment;
    out.col_partition = cols.assignment;
    out.row_order = detail::grouping_order(rows.assignment);
    out.col_order = detail::grouping_order(cols.assignment);
    return out;
}

} // namespace bicluster
