#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bicluster/errors.hpp"
#include "bicluster/prng.hpp"

namespace bicluster {

using Index = Eigen::Index;

/// Small a-by-b matrix of nonnegative block intensities. Rows index row
/// blocks, columns index column blocks.
class PatternMatrix {
public:
    explicit PatternMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
        if (entries_.rows() < 1 || entries_.cols() < 1)
            throw StructuralError("pattern matrix must be nonempty");
        if (!entries_.allFinite())
            throw DataError("pattern matrix has non-finite entries");
        if ((entries_.array() < 0.0).any())
            throw DataError("pattern matrix entries must be nonnegative");
    }

    const Eigen::MatrixXd& entries() const { return entries_; }
    double operator()(Index i, Index j) const { return entries_(i, j); }
    Index row_blocks() const { return entries_.rows(); }
    Index col_blocks() const { return entries_.cols(); }

    /// True when every intensity lies in [0,1] and can serve as a probability.
    bool unit_interval() const {
        return (entries_.array() <= 1.0).all();
    }

    /// True when some row or column is identically zero. Such patterns are
    /// valid for blow-up and sampling but rejected by the degree
    /// normalization, which needs positive margins.
    bool has_zero_line() const {
        for (Index i = 0; i < entries_.rows(); ++i)
            if (entries_.row(i).isZero(0.0)) return true;
        for (Index j = 0; j < entries_.cols(); ++j)
            if (entries_.col(j).isZero(0.0)) return true;
        return false;
    }

private:
    Eigen::MatrixXd entries_;
};

/// Sizes of the row and column blocks of a blown up matrix. Every block is
/// nonempty; the minimum relative sizes c and d are the balance constants
/// used throughout the size-sweep checks.
class BlockStructure {
public:
    BlockStructure(std::vector<Index> row_sizes, std::vector<Index> col_sizes)
        : row_sizes_(std::move(row_sizes)), col_sizes_(std::move(col_sizes)) {
        if (row_sizes_.empty() || col_sizes_.empty())
            throw StructuralError("block structure must have at least one block per side");
        for (Index s : row_sizes_)
            if (s < 1) throw StructuralError("row block sizes must be >= 1");
        for (Index s : col_sizes_)
            if (s < 1) throw StructuralError("column block sizes must be >= 1");
    }

    const std::vector<Index>& row_sizes() const { return row_sizes_; }
    const std::vector<Index>& col_sizes() const { return col_sizes_; }
    Index row_blocks() const { return static_cast<Index>(row_sizes_.size()); }
    Index col_blocks() const { return static_cast<Index>(col_sizes_.size()); }

    Index rows() const { return std::accumulate(row_sizes_.begin(), row_sizes_.end(), Index{0}); }
    Index cols() const { return std::accumulate(col_sizes_.begin(), col_sizes_.end(), Index{0}); }

    /// min_i m_i / m
    double min_row_fraction() const {
        return static_cast<double>(*std::min_element(row_sizes_.begin(), row_sizes_.end())) /
               static_cast<double>(rows());
    }

    /// min_j n_j / n
    double min_col_fraction() const {
        return static_cast<double>(*std::min_element(col_sizes_.begin(), col_sizes_.end())) /
               static_cast<double>(cols());
    }

    /// Block label of each row, in row order (0-based).
    std::vector<int> row_labels() const { return labels(row_sizes_); }
    std::vector<int> col_labels() const { return labels(col_sizes_); }

    /// Rescales the structure to total sizes (m, n), keeping the block size
    /// ratios. Uses largest-remainder rounding; every block stays nonempty.
    BlockStructure scaled_to(Index m, Index n) const {
        return BlockStructure(scale(row_sizes_, m), scale(col_sizes_, n));
    }

private:
    static std::vector<int> labels(const std::vector<Index>& sizes) {
        std::vector<int> out;
        for (std::size_t b = 0; b < sizes.size(); ++b)
            out.insert(out.end(), static_cast<std::size_t>(sizes[b]), static_cast<int>(b));
        return out;
    }

    static std::vector<Index> scale(const std::vector<Index>& sizes, Index total) {
        const auto parts = static_cast<Index>(sizes.size());
        if (total < parts)
            throw StructuralError("target size smaller than the number of blocks");
        const double sum = static_cast<double>(std::accumulate(sizes.begin(), sizes.end(), Index{0}));
        std::vector<Index> out(sizes.size());
        std::vector<std::pair<double, std::size_t>> remainders;
        Index assigned = 0;
        for (std::size_t i = 0; i < sizes.size(); ++i) {
            double exact = static_cast<double>(total) * static_cast<double>(sizes[i]) / sum;
            out[i] = std::max<Index>(1, static_cast<Index>(std::floor(exact)));
            assigned += out[i];
            remainders.emplace_back(exact - std::floor(exact), i);
        }
        std::sort(remainders.begin(), remainders.end(),
                  [](const auto& a, const auto& b) { return a.first > b.first; });
        std::size_t cursor = 0;
        while (assigned < total) {
            out[remainders[cursor % remainders.size()].second] += 1;
            ++assigned;
            ++cursor;
        }
        // The max(1, floor) guard can overshoot; shave the smallest remainders,
        // never emptying a block. assigned > total implies some block has >= 2.
        while (assigned > total) {
            for (auto it = remainders.rbegin(); it != remainders.rend() && assigned > total; ++it) {
                if (out[it->second] > 1) {
                    out[it->second] -= 1;
                    --assigned;
                }
            }
        }
        return out;
    }

    std::vector<Index> row_sizes_;
    std::vector<Index> col_sizes_;
};

enum class NoiseKind {
    UniformBounded, ///< i.i.d. Uniform(-K, K): zero mean, |w| <= K, variance K^2/3
    BernoulliBlock, ///< blockwise 0/1 sampling; w in {1-p, -p}, needs a pattern
    Gaussian        ///< i.i.d. N(0, sigma^2); unbounded, outside the bounded-noise model
};

/// Parameters of a noise draw. `bound` is the uniform half-width K, `sigma`
/// the Gaussian standard deviation; each is read only by its own kind.
struct NoiseSpec {
    NoiseKind kind = NoiseKind::UniformBounded;
    double bound = 1.0;
    double sigma = 1.0;
    std::uint64_t seed = 0;

    static NoiseSpec uniform(double bound, std::uint64_t seed) {
        return NoiseSpec{NoiseKind::UniformBounded, bound, 0.0, seed};
    }
    static NoiseSpec gaussian(double sigma, std::uint64_t seed) {
        return NoiseSpec{NoiseKind::Gaussian, 0.0, sigma, seed};
    }

    void validate() const {
        if (kind == NoiseKind::UniformBounded && !(bound > 0.0))
            throw ParameterError("uniform noise bound K must be positive");
        if (kind == NoiseKind::Gaussian && !(sigma > 0.0))
            throw ParameterError("gaussian noise sigma must be positive");
    }
};

/// Expands the pattern into an m-by-n matrix that is constant p_ij on
/// block (i, j).
inline Eigen::MatrixXd blow_up(const PatternMatrix& pattern, const BlockStructure& structure) {
    if (structure.row_blocks() != pattern.row_blocks() ||
        structure.col_blocks() != pattern.col_blocks())
        throw StructuralError("pattern shape does not match the block structure");
    Eigen::MatrixXd out(structure.rows(), structure.cols());
    Index r0 = 0;
    for (Index i = 0; i < pattern.row_blocks(); ++i) {
        Index c0 = 0;
        for (Index j = 0; j < pattern.col_blocks(); ++j) {
            out.block(r0, c0, structure.row_sizes()[i], structure.col_sizes()[j])
                .setConstant(pattern(i, j));
            c0 += structure.col_sizes()[j];
        }
        r0 += structure.row_sizes()[i];
    }
    return out;
}

/// Draws an m-by-n noise matrix. Entries are filled column-major so the draw
/// is a pure function of (m, n, spec).
inline Eigen::MatrixXd sample_noise(Index m, Index n, const NoiseSpec& spec) {
    if (m < 1 || n < 1) throw ParameterError("noise dimensions must be >= 1");
    spec.validate();
    if (spec.kind == NoiseKind::BernoulliBlock)
        throw ParameterError("bernoulli noise needs a pattern; use sample_bernoulli_noise");
    Eigen::MatrixXd w(m, n);
    Rng rng(spec.seed);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < m; ++i)
            w(i, j) = spec.kind == NoiseKind::UniformBounded ? rng.symmetric_uniform(spec.bound)
                                                             : rng.gaussian(spec.sigma);
    return w;
}

/// A 0/1 observation together with the noise that produced it.
/// observed = blow_up(pattern, structure) + noise holds entrywise and exactly.
struct BernoulliSample {
    Eigen::MatrixXd observed; ///< 0/1 matrix A
    Eigen::MatrixXd noise;    ///< W with entries in {1 - p_ij, -p_ij}
};

/// Samples each entry of block (i, j) as 1 with probability p_ij.
inline BernoulliSample sample_bernoulli_noise(const PatternMatrix& pattern,
                                              const BlockStructure& structure,
                                              std::uint64_t seed) {
    if (!pattern.unit_interval())
        throw ParameterError("bernoulli sampling needs pattern entries in [0, 1]");
    Eigen::MatrixXd mean = blow_up(pattern, structure);
    const Index m = mean.rows(), n = mean.cols();
    BernoulliSample out{Eigen::MatrixXd(m, n), Eigen::MatrixXd(m, n)};
    Rng rng(seed);
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < m; ++i) {
            double p = mean(i, j);
            double a = rng.uniform01() < p ? 1.0 : 0.0;
            out.observed(i, j) = a;
            out.noise(i, j) = a - p;
        }
    }
    return out;
}

/// Polynomial growth witness: m <= C0 * n^C and n <= D0 * m^D.
struct GrowthWitness {
    double C0 = 1.0;
    double C = 1.0;
    double D0 = 1.0;
    double D = 1.0;
};

struct GrowthReport {
    struct Entry {
        Index m = 0, n = 0;
        double c = 0.0; ///< min_i m_i / m
        double d = 0.0; ///< min_j n_j / n
        bool gc2_ok = false;
    };
    std::vector<Entry> entries;
    bool gc2_holds = false; ///< witness valid for every structure in the sweep
};

/// Reports the balance constants of each structure and whether the witness
/// constants bound the sweep's growth on both sides.
inline GrowthReport check_gc(const std::vector<BlockStructure>& sweep,
                             const GrowthWitness& witness = {}) {
    GrowthReport report;
    report.gc2_holds = !sweep.empty();
    for (const auto& bs : sweep) {
        GrowthReport::Entry e;
        e.m = bs.rows();
        e.n = bs.cols();
        e.c = bs.min_row_fraction();
        e.d = bs.min_col_fraction();
        const double m = static_cast<double>(e.m), n = static_cast<double>(e.n);
        e.gc2_ok = m <= witness.C0 * std::pow(n, witness.C) &&
                   n <= witness.D0 * std::pow(m, witness.D);
        report.gc2_holds = report.gc2_holds && e.gc2_ok;
        report.entries.push_back(e);
    }
    return report;
}

} // namespace bicluster
