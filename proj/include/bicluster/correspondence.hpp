#pragma once

#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "bicluster/clustering.hpp"
#include "bicluster/errors.hpp"
#include "bicluster/model.hpp"
#include "bicluster/spectra.hpp"

namespace bicluster {

/// Degree-normalized matrix D_row^{-1/2} M D_col^{-1/2} with its margins.
/// `svd`, `corr_left` and `corr_right` start empty; fill them with
/// compute_corr_svd / corr_vectors once the number of kept factors is known.
struct CorrespondenceDecomposition {
    Eigen::MatrixXd normalized;
    Eigen::VectorXd row_sums;
    Eigen::VectorXd col_sums;
    SvdResult svd;
    Eigen::MatrixXd corr_left;  ///< m-by-k, column i = D_row^{-1/2} * left_i
    Eigen::MatrixXd corr_right; ///< n-by-k, column i = D_col^{-1/2} * right_i
};

/// Divides each entry by the square roots of its row and column sums. The
/// result is invariant under positive rescaling of M, its top singular value
/// is at most 1, and for a blown up M the whole nonzero spectrum is
/// size-independent.
inline CorrespondenceDecomposition corr_transform(const Eigen::MatrixXd& m) {
    if (!m.allFinite()) throw DataError("corr_transform: matrix has non-finite entries");
    if ((m.array() < 0.0).any()) throw DataError("corr_transform: matrix must be nonnegative");
    CorrespondenceDecomposition dec;
    dec.row_sums = m.rowwise().sum();
    dec.col_sums = m.colwise().sum();
    for (Index i = 0; i < dec.row_sums.size(); ++i)
        if (!(dec.row_sums(i) > 0.0))
            throw DataError("corr_transform: row " + std::to_string(i) + " sums to zero");
    for (Index j = 0; j < dec.col_sums.size(); ++j)
        if (!(dec.col_sums(j) > 0.0))
            throw DataError("corr_transform: column " + std::to_string(j) + " sums to zero");
    dec.normalized.resize(m.rows(), m.cols());
    for (Index j = 0; j < m.cols(); ++j)
        for (Index i = 0; i < m.rows(); ++i)
            dec.normalized(i, j) = m(i, j) / std::sqrt(dec.row_sums(i) * dec.col_sums(j));
    return dec;
}

/// Computes the top-k singular triplets of the normalized matrix in place.
inline void compute_corr_svd(CorrespondenceDecomposition& dec, Index k) {
    dec.svd = thin_svd(dec.normalized, k);
}

/// Rescales the first k singular vector pairs by the inverse square-root
/// margins, giving the category coordinates. When the top singular value 1 is
/// simple, the first pair is constant and carries no information.
inline void corr_vectors(CorrespondenceDecomposition& dec, Index k) {
    if (k < 1 || k > dec.svd.count())
        throw ParameterError("corr_vectors: k exceeds the computed triplets");
    dec.corr_left = dec.row_sums.array().rsqrt().matrix().asDiagonal() * dec.svd.left.leftCols(k);
    dec.corr_right = dec.col_sums.array().rsqrt().matrix().asDiagonal() * dec.svd.right.leftCols(k);
}

/// Weighted k-means on category coordinates (the nontrivial columns), with
/// the margins as weights. The returned objective is the weighted
/// within-cluster sum of squares at the found partition.
inline Clustering corr_weighted_variance(const Eigen::MatrixXd& corr_points,
                                         const Eigen::VectorXd& weights, int k_parts,
                                         std::uint64_t seed, int restarts = 10) {
    return kmeans(Representation(corr_points, weights), k_parts, seed, restarts);
}

/// The small matrix whose singular values are exactly the nonzero singular
/// values of the degree-normalized blow-up of `pattern`:
/// entries p_ij sqrt(m_i n_j) / sqrt(rowsum_i colsum_j) with the weighted
/// margins rowsum_i = sum_l p_il n_l, colsum_j = sum_k p_kj m_k. Depends on
/// the block size ratios only; its top singular value is 1.
inline Eigen::MatrixXd corr_shrunken_pattern(const PatternMatrix& pattern,
                                             const BlockStructure& structure) {
    if (structure.row_blocks() != pattern.row_blocks() ||
        structure.col_blocks() != pattern.col_blocks())
        throw StructuralError("pattern shape does not match the block structure");
    if (pattern.has_zero_line())
        throw DataError("degree normalization needs a pattern without zero rows or columns");
    const Index a = pattern.row_blocks(), b = pattern.col_blocks();
    Eigen::VectorXd m_sizes(a), n_sizes(b);
    for (Index i = 0; i < a; ++i) m_sizes(i) = static_cast<double>(structure.row_sizes()[i]);
    for (Index j = 0; j < b; ++j) n_sizes(j) = static_cast<double>(structure.col_sizes()[j]);
    Eigen::VectorXd row_sums = pattern.entries() * n_sizes;
    Eigen::VectorXd col_sums = pattern.entries().transpose() * m_sizes;
    Eigen::MatrixXd out(a, b);
    for (Index i = 0; i < a; ++i)
        for (Index j = 0; j < b; ++j)
            out(i, j) = pattern(i, j) * std::sqrt(m_sizes(i) * n_sizes(j)) /
                        std::sqrt(row_sums(i) * col_sums(j));
    return out;
}

/// Smallest nonzero singular value delta of the normalized blown-up matrix,
/// computed from the pattern. All of its r nonzero values lie in [delta, 1].
inline double corr_delta(const PatternMatrix& pattern, const BlockStructure& structure) {
    Eigen::VectorXd values = singular_values(corr_shrunken_pattern(pattern, structure));
    const double cutoff = static_cast<double>(std::max(pattern.row_blocks(), pattern.col_blocks())) *
                          std::numeric_limits<double>::epsilon() * values(0);
    double smallest = values(0);
    for (Index i = 0; i < values.size(); ++i)
        if (values(i) > cutoff) smallest = values(i);
    return smallest;
}

/// Multiplicity of 1 as a singular value (within `tol`); greater than one
/// signals a reducible source matrix.
inline Index corr_top_multiplicity(const Eigen::VectorXd& values, double tol = 1e-6) {
    Index count = 0;
    for (Index i = 0; i < values.size(); ++i)
        if (std::abs(values(i) - 1.0) <= tol) ++count;
    return count;
}

} // namespace bicluster
