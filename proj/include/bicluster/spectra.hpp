#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <lapacke.h>

#include "bicluster/errors.hpp"
#include "bicluster/model.hpp"

namespace bicluster {

/// Top singular triplets of a matrix, values descending. The columns of
/// `left` (m-by-k) and `right` (n-by-k) are orthonormal and satisfy
/// M * right.col(i) = values[i] * left.col(i).
struct SvdResult {
    Eigen::VectorXd values;
    Eigen::MatrixXd left;
    Eigen::MatrixXd right;

    Index count() const { return values.size(); }
};

namespace detail {

/// Flips signs so the largest-magnitude coordinate of each left vector is
/// positive (first such coordinate on ties). Keeps regression output stable
/// across runs and backends.
inline void apply_sign_convention(SvdResult& svd) {
    for (Index j = 0; j < svd.left.cols(); ++j) {
        Index at = 0;
        svd.left.col(j).cwiseAbs().maxCoeff(&at);
        if (svd.left(at, j) < 0.0) {
            svd.left.col(j) = -svd.left.col(j);
            svd.right.col(j) = -svd.right.col(j);
        }
    }
}

/// LAPACK divide-and-conquer bidiagonalization SVD (dgesdd).
/// compute_vectors=false keeps only the values.
inline void gesdd(const Eigen::MatrixXd& m, bool compute_vectors, Eigen::VectorXd& values,
                  Eigen::MatrixXd* left, Eigen::MatrixXd* right) {
    const auto rows = static_cast<lapack_int>(m.rows());
    const auto cols = static_cast<lapack_int>(m.cols());
    const lapack_int rank = std::min(rows, cols);
    Eigen::MatrixXd work = m; // dgesdd destroys its input
    values.resize(rank);
    lapack_int info;
    if (compute_vectors) {
        left->resize(rows, rank);
        Eigen::MatrixXd vt(rank, cols);
        info = LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'S', rows, cols, work.data(), rows,
                              values.data(), left->data(), rows, vt.data(), rank);
        *right = vt.transpose();
    } else {
        info = LAPACKE_dgesdd(LAPACK_COL_MAJOR, 'N', rows, cols, work.data(), rows,
                              values.data(), nullptr, rows, nullptr, rank);
    }
    if (info != 0)
        throw DataError("dgesdd failed to converge (info=" + std::to_string(info) + ")");
}

} // namespace detail

/// All singular values of M, descending, without vectors.
inline Eigen::VectorXd singular_values(const Eigen::MatrixXd& m) {
    if (!m.allFinite()) throw DataError("singular_values: matrix has non-finite entries");
    Eigen::VectorXd values;
    detail::gesdd(m, false, values, nullptr, nullptr);
    return values;
}

/// Top-k singular triplets of M.
inline SvdResult thin_svd(const Eigen::MatrixXd& m, Index k) {
    if (k < 1 || k > std::min(m.rows(), m.cols()))
        throw ParameterError("thin_svd: k must satisfy 1 <= k <= min(m, n)");
    if (!m.allFinite()) throw DataError("thin_svd: matrix has non-finite entries");
    Eigen::VectorXd values;
    Eigen::MatrixXd left, right;
    detail::gesdd(m, true, values, &left, &right);
    SvdResult out{values.head(k), left.leftCols(k), right.leftCols(k)};
    detail::apply_sign_convention(out);
    return out;
}

/// Largest singular value.
inline double spectral_norm(const Eigen::MatrixXd& m) {
    return singular_values(m)(0);
}

/// SVD of a blown up matrix computed from its pattern: the nonzero part of
/// the spectrum equals that of the a-by-b matrix with entries
/// sqrt(m_i n_j) p_ij, and the singular vectors expand to vectors that are
/// constant on each block. The decomposition cost depends on (a, b) only.
inline SvdResult exact_blownup_svd(const PatternMatrix& pattern, const BlockStructure& structure) {
    if (structure.row_blocks() != pattern.row_blocks() ||
        structure.col_blocks() != pattern.col_blocks())
        throw StructuralError("pattern shape does not match the block structure");

    const Index a = pattern.row_blocks(), b = pattern.col_blocks();
    Eigen::VectorXd row_scale(a), col_scale(b);
    for (Index i = 0; i < a; ++i) row_scale(i) = std::sqrt(static_cast<double>(structure.row_sizes()[i]));
    for (Index j = 0; j < b; ++j) col_scale(j) = std::sqrt(static_cast<double>(structure.col_sizes()[j]));

    Eigen::MatrixXd shrunken = row_scale.asDiagonal() * pattern.entries() * col_scale.asDiagonal();
    Eigen::VectorXd values;
    Eigen::MatrixXd z, w; // left / right vectors of the shrunken matrix
    detail::gesdd(shrunken, true, values, &z, &w);

    // numerical rank: values below max(a, b) * eps * s_1 count as zero
    const double cutoff = values.size() == 0
                              ? 0.0
                              : static_cast<double>(std::max(a, b)) *
                                    std::numeric_limits<double>::epsilon() * values(0);
    Index r = 0;
    while (r < values.size() && values(r) > cutoff) ++r;

    SvdResult out;
    out.values = values.head(r);
    out.left.resize(structure.rows(), r);
    out.right.resize(structure.cols(), r);
    const auto row_labels = structure.row_labels();
    const auto col_labels = structure.col_labels();
    for (Index t = 0; t < r; ++t) {
        for (Index i = 0; i < out.left.rows(); ++i)
            out.left(i, t) = z(row_labels[static_cast<std::size_t>(i)], t) /
                             row_scale(row_labels[static_cast<std::size_t>(i)]);
        for (Index j = 0; j < out.right.rows(); ++j)
            out.right(j, t) = w(col_labels[static_cast<std::size_t>(j)], t) /
                              col_scale(col_labels[static_cast<std::size_t>(j)]);
    }
    detail::apply_sign_convention(out);
    return out;
}

/// Symmetric dilation (1/K) [[0, W], [W^T, 0]]. Its nonzero eigenvalues are
/// +-s_i(W)/K, so eigenvalue bounds for symmetric matrices transfer to
/// singular values.
inline Eigen::MatrixXd dilate(const Eigen::MatrixXd& w, double bound) {
    if (!(bound > 0.0)) throw ParameterError("dilate: scale K must be positive");
    const Index m = w.rows(), n = w.cols();
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(m + n, m + n);
    out.topRightCorner(m, n) = w / bound;
    out.bottomLeftCorner(n, m) = w.transpose() / bound;
    return out;
}

/// Count of singular values at or above the threshold t * sqrt(m + n),
/// with the ratio across the cut.
struct GapDecision {
    Index k = 0;
    double threshold = 0.0;
    double gap_ratio = 0.0; ///< values[k-1] / values[k]; +inf past the end or on zero; NaN when k = 0
};

inline GapDecision detect_gap(const Eigen::VectorXd& values, Index m, Index n, double t = 3.0) {
    if (!(t > 0.0)) throw ParameterError("detect_gap: threshold factor t must be positive");
    if (m < 1 || n < 1) throw ParameterError("detect_gap: dimensions must be >= 1");
    for (Index i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values(i))) throw DataError("detect_gap: non-finite value");
        if (i > 0 && values(i) > values(i - 1))
            throw DataError("detect_gap: values must be descending");
    }
    GapDecision decision;
    decision.threshold = t * std::sqrt(static_cast<double>(m + n));
    while (decision.k < values.size() && values(decision.k) >= decision.threshold) ++decision.k;
    if (decision.k == 0)
        decision.gap_ratio = std::numeric_limits<double>::quiet_NaN();
    else if (decision.k >= values.size() || values(decision.k) == 0.0)
        decision.gap_ratio = std::numeric_limits<double>::infinity();
    else
        decision.gap_ratio = values(decision.k - 1) / values(decision.k);
    return decision;
}

} // namespace bicluster
