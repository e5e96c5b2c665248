#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bicluster/clustering.hpp"
#include "bicluster/correspondence.hpp"
#include "bicluster/errors.hpp"
#include "bicluster/matrix_io.hpp"
#include "bicluster/model.hpp"
#include "bicluster/reconstruct.hpp"
#include "bicluster/spectra.hpp"

namespace bicluster {

/// A seeded sweep over matrix sizes: every (size, seed) cell generates one
/// planted instance and runs the detection/clustering/reconstruction chain.
struct ExperimentConfig {
    std::string pattern_file;
    std::optional<PatternMatrix> pattern;       ///< loaded from pattern_file
    std::optional<BlockStructure> base_structure;
    std::vector<std::pair<Index, Index>> sweep; ///< target (m, n) per cell
    NoiseKind noise_kind = NoiseKind::UniformBounded;
    bool noiseless = false; ///< no noise at all (kind "none" or uniform bound 0)
    double noise_bound = 1.0;
    double noise_sigma = 1.0;
    int seeds = 1;
    std::uint64_t seed_base = 1;
    double tau = 0.4;
    double gap_threshold = 3.0;
    int restarts = 10;
    int workers = 1;
    double trial_time_limit_s = 300.0;
    GrowthWitness gc2_witness;
    std::string out_dir = "out";

    void validate() const {
        if (!pattern || !base_structure) throw ParameterError("experiment: pattern not loaded");
        if (sweep.empty()) throw ParameterError("experiment: sweep must be nonempty");
        if (seeds < 1) throw ParameterError("experiment: seeds must be >= 1");
        if (!(tau > 0.0 && tau < 0.5)) throw ParameterError("experiment: tau must be in (0, 1/2)");
        if (!(gap_threshold > 0.0)) throw ParameterError("experiment: gap threshold must be positive");
        if (restarts < 1 || workers < 1) throw ParameterError("experiment: restarts and workers must be >= 1");
        if (!(trial_time_limit_s > 0.0)) throw ParameterError("experiment: time limit must be positive");
        if (noise_kind == NoiseKind::BernoulliBlock && !pattern->unit_interval())
            throw ParameterError("experiment: bernoulli noise needs pattern entries in [0, 1]");
        for (auto [m, n] : sweep)
            if (m < base_structure->row_blocks() || n < base_structure->col_blocks())
                throw ParameterError("experiment: sweep size smaller than the block counts");
    }
};

/// One (size, seed) cell of the sweep. `top_values` holds the leading
/// rank+3 singular values; `corr_values` the leading rank+1 singular values
/// of the degree-normalized observation (only when it is nonnegative with
/// positive margins, e.g. under 0/1 noise).
struct TrialRecord {
    Index m = 0, n = 0;
    int seed_index = 0;
    std::uint64_t seed = 0;
    std::string status = "ok"; ///< ok | failed | timeout
    std::string message;
    std::vector<double> top_values;
    double norm_w = 0.0;
    Index gap_k = 0;
    double gap_ratio = 0.0;
    double s_a2 = 0.0, s_b2 = 0.0;
    bool row_recovered = false, col_recovered = false;
    double residual_norm = 0.0;
    std::vector<double> corr_values;
    double wall_time_s = 0.0;
};

struct ExperimentResult {
    std::vector<TrialRecord> trials;
    nlohmann::json summary;
    int exit_code = 0; ///< 0 all trials ok, 1 otherwise
};

namespace detail {

struct TrialTimeout : Error {
    using Error::Error;
};

class StageClock {
public:
    explicit StageClock(double limit_s) : limit_s_(limit_s), start_(std::chrono::steady_clock::now()) {}
    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }
    /// Call between pipeline stages; a trial over budget stops at the next gate.
    void checkpoint() const {
        if (elapsed() > limit_s_) throw TrialTimeout("trial exceeded its time budget");
    }

private:
    double limit_s_;
    std::chrono::steady_clock::time_point start_;
};

inline double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : (v[h - 1] + v[h]) / 2.0;
}

/// RFC 4180 quoting for the free-text message column.
inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

} // namespace detail

/// Runs one planted trial. The seed is a pure function of
/// (seed_base, m, n, seed_index), so extending the sweep or the seed count
/// never reshuffles existing cells.
inline TrialRecord run_trial(const ExperimentConfig& cfg, Index m, Index n, int seed_index) {
    TrialRecord rec;
    rec.m = m;
    rec.n = n;
    rec.seed_index = seed_index;
    rec.seed = derive_seed(cfg.seed_base, {static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(n),
                                           static_cast<std::uint64_t>(seed_index)});
    detail::StageClock clock(cfg.trial_time_limit_s);
    try {
        const PatternMatrix& pattern = *cfg.pattern;
        const BlockStructure structure = cfg.base_structure->scaled_to(m, n);
        const Eigen::MatrixXd planted = blow_up(pattern, structure);
        const SvdResult exact = exact_blownup_svd(pattern, structure);
        const auto rank = exact.count();
        if (rank < 1) throw DataError("pattern has rank zero");

        Eigen::MatrixXd noise, observed;
        if (cfg.noiseless) {
            noise = Eigen::MatrixXd::Zero(m, n);
            observed = planted;
        } else if (cfg.noise_kind == NoiseKind::BernoulliBlock) {
            auto sample = sample_bernoulli_noise(pattern, structure, rec.seed);
            observed = std::move(sample.observed);
            noise = std::move(sample.noise);
        } else {
            NoiseSpec spec = cfg.noise_kind == NoiseKind::UniformBounded
                                 ? NoiseSpec::uniform(cfg.noise_bound, rec.seed)
                                 : NoiseSpec::gaussian(cfg.noise_sigma, rec.seed);
            noise = sample_noise(m, n, spec);
            observed = planted + noise;
        }
        rec.norm_w = cfg.noiseless ? 0.0 : spectral_norm(noise);
        clock.checkpoint();

        const Index top = std::min<Index>(rank + 3, std::min(m, n));
        const SvdResult svd = thin_svd(observed, top);
        rec.top_values.assign(svd.values.data(), svd.values.data() + svd.values.size());
        const GapDecision gap = detect_gap(svd.values, m, n, cfg.gap_threshold);
        rec.gap_k = gap.k;
        rec.gap_ratio = gap.gap_ratio;
        clock.checkpoint();

        const auto a = static_cast<int>(pattern.row_blocks());
        const auto b = static_cast<int>(pattern.col_blocks());
        Clustering rows = kmeans(representatives(svd, Side::Left, rank), a,
                                 derive_seed(rec.seed, {2}), cfg.restarts);
        Clustering cols = kmeans(representatives(svd, Side::Right, rank), b,
                                 derive_seed(rec.seed, {3}), cfg.restarts);
        rec.s_a2 = rows.within_variance;
        rec.s_b2 = cols.within_variance;
        rec.row_recovered = same_partition(rows.assignment, structure.row_labels());
        rec.col_recovered = same_partition(cols.assignment, structure.col_labels());
        clock.checkpoint();

        auto recon = reconstruct(observed, static_cast<int>(rank), a, b,
                                 derive_seed(rec.seed, {4}), cfg.restarts);
        rec.residual_norm = recon.residual_norm;
        clock.checkpoint();

        // degree normalization applies only to nonnegative observations
        if ((observed.array() >= 0.0).all() && observed.rowwise().sum().minCoeff() > 0.0 &&
            observed.colwise().sum().minCoeff() > 0.0) {
            CorrespondenceDecomposition dec = corr_transform(observed);
            Eigen::VectorXd corr_vals = singular_values(dec.normalized);
            const Index keep = std::min<Index>(rank + 1, corr_vals.size());
            rec.corr_values.assign(corr_vals.data(), corr_vals.data() + keep);
        }
    } catch (const detail::TrialTimeout& e) {
        rec.status = "timeout";
        rec.message = e.what();
    } catch (const Error& e) {
        rec.status = "failed";
        rec.message = e.what();
    }
    rec.wall_time_s = clock.elapsed();
    return rec;
}

namespace detail {

inline void write_trials_csv(std::ostream& os, const std::vector<TrialRecord>& trials, Index rank) {
    os << "m,n,seed_index,seed,status,norm_w,gap_k,gap_ratio";
    for (Index i = 1; i <= rank + 3; ++i) os << ",sv_" << i;
    os << ",s_a2,s_b2,row_recovered,col_recovered,residual_norm";
    for (Index i = 1; i <= rank + 1; ++i) os << ",corr_sv_" << i;
    os << ",message\r\n";
    for (const auto& t : trials) {
        os << t.m << ',' << t.n << ',' << t.seed_index << ',' << t.seed << ',' << t.status << ','
           << format_double(t.norm_w) << ',' << t.gap_k << ','
           << (std::isfinite(t.gap_ratio) ? format_double(t.gap_ratio) : ""); // empty past the spectrum
        for (Index i = 0; i < rank + 3; ++i)
            os << ',' << (i < static_cast<Index>(t.top_values.size())
                              ? format_double(t.top_values[static_cast<std::size_t>(i)])
                              : "");
        os << ',' << format_double(t.s_a2) << ',' << format_double(t.s_b2) << ','
           << (t.row_recovered ? 1 : 0) << ',' << (t.col_recovered ? 1 : 0) << ','
           << format_double(t.residual_norm);
        for (Index i = 0; i < rank + 1; ++i)
            os << ',' << (i < static_cast<Index>(t.corr_values.size())
                              ? format_double(t.corr_values[static_cast<std::size_t>(i)])
                              : "");
        os << ',' << csv_quote(t.message) << "\r\n";
    }
}

inline nlohmann::json summarize(const ExperimentConfig& cfg, const std::vector<TrialRecord>& trials,
                                Index rank) {
    nlohmann::json summary;
    summary["pattern_file"] = cfg.pattern_file;
    summary["pattern_rank"] = rank;
    summary["tau"] = cfg.tau;
    summary["gap_threshold"] = cfg.gap_threshold;
    summary["seeds"] = cfg.seeds;
    summary["seed_base"] = cfg.seed_base;

    std::vector<BlockStructure> structures;
    for (auto [m, n] : cfg.sweep) structures.push_back(cfg.base_structure->scaled_to(m, n));
    GrowthReport gc = check_gc(structures, cfg.gc2_witness);
    nlohmann::json gc_json;
    gc_json["gc2_holds"] = gc.gc2_holds;
    for (const auto& e : gc.entries)
        gc_json["entries"].push_back({{"m", e.m}, {"n", e.n}, {"c", e.c}, {"d", e.d}, {"gc2_ok", e.gc2_ok}});
    summary["gc"] = gc_json;

    summary["sizes"] = nlohmann::json::array();
    for (auto [m, n] : cfg.sweep) {
        nlohmann::json cell;
        cell["m"] = m;
        cell["n"] = n;
        std::vector<const TrialRecord*> ok;
        int failed = 0;
        for (const auto& t : trials)
            if (t.m == m && t.n == n) {
                if (t.status == "ok")
                    ok.push_back(&t);
                else
                    ++failed;
            }
        cell["trials"] = ok.size() + static_cast<std::size_t>(failed);
        cell["ok"] = ok.size();
        cell["failed"] = failed;
        auto collect = [&](auto&& get) {
            std::vector<double> v;
            for (auto* t : ok) v.push_back(get(*t));
            return v;
        };
        const double sqrt_mn = std::sqrt(static_cast<double>(m) * static_cast<double>(n));
        const double sqrt_mpn = std::sqrt(static_cast<double>(m + n));
        auto nth_value = [rank](const TrialRecord& t, Index i) {
            return i < static_cast<Index>(t.top_values.size())
                       ? t.top_values[static_cast<std::size_t>(i)]
                       : 0.0;
        };
        cell["median_top_over_sqrt_mn"] =
            median(collect([&](const TrialRecord& t) { return nth_value(t, rank - 1) / sqrt_mn; }));
        cell["median_next_over_sqrt_mpn"] =
            median(collect([&](const TrialRecord& t) { return nth_value(t, rank) / sqrt_mpn; }));
        cell["median_normw_over_sqrt_mpn"] =
            median(collect([&](const TrialRecord& t) { return t.norm_w / sqrt_mpn; }));
        cell["max_normw_over_sqrt_mpn"] = [&] {
            double best = 0.0;
            for (auto* t : ok) best = std::max(best, t->norm_w / sqrt_mpn);
            return best;
        }();
        cell["gap_rate"] = [&] {
            if (ok.empty()) return 0.0;
            int hit = 0;
            for (auto* t : ok) hit += t->gap_k == rank;
            return static_cast<double>(hit) / static_cast<double>(ok.size());
        }();
        cell["row_recovery_rate"] = [&] {
            if (ok.empty()) return 0.0;
            int hit = 0;
            for (auto* t : ok) hit += t->row_recovered;
            return static_cast<double>(hit) / static_cast<double>(ok.size());
        }();
        cell["col_recovery_rate"] = [&] {
            if (ok.empty()) return 0.0;
            int hit = 0;
            for (auto* t : ok) hit += t->col_recovered;
            return static_cast<double>(hit) / static_cast<double>(ok.size());
        }();
        cell["median_s_a2"] = median(collect([](const TrialRecord& t) { return t.s_a2; }));
        cell["median_s_b2"] = median(collect([](const TrialRecord& t) { return t.s_b2; }));
        const double scale = sqrt_mn * sqrt_mn / static_cast<double>(m + n);
        cell["median_s_a2_scaled"] = median(collect([&](const TrialRecord& t) { return t.s_a2 * scale; }));
        cell["median_s_b2_scaled"] = median(collect([&](const TrialRecord& t) { return t.s_b2 * scale; }));
        cell["median_residual_over_sqrt_mpn"] =
            median(collect([&](const TrialRecord& t) { return t.residual_norm / sqrt_mpn; }));
        std::vector<const TrialRecord*> with_corr;
        for (auto* t : ok)
            if (!t->corr_values.empty()) with_corr.push_back(t);
        if (!with_corr.empty()) {
            nlohmann::json corr;
            corr["count"] = with_corr.size();
            std::vector<double> next;
            for (auto* t : with_corr)
                next.push_back(t->corr_values.size() > static_cast<std::size_t>(rank)
                                   ? t->corr_values[static_cast<std::size_t>(rank)]
                                   : 0.0);
            corr["median_next"] = median(next);
            corr["max_next"] = *std::max_element(next.begin(), next.end());
            std::vector<double> top_r;
            for (auto* t : with_corr) top_r.push_back(t->corr_values[static_cast<std::size_t>(rank) - 1]);
            corr["median_r_th"] = median(top_r);
            cell["corr"] = corr;
        }
        summary["sizes"].push_back(cell);
    }
    return summary;
}

} // namespace detail

/// Writes plot data and a gnuplot script from an existing summary file.
/// Idempotent: same summary, same outputs.
inline void render_report(const std::string& summary_path, const std::string& out_dir) {
    std::ifstream f(summary_path);
    if (!f) throw IoError("cannot open summary: " + summary_path);
    nlohmann::json summary;
    try {
        f >> summary;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed summary " + summary_path + ": " + e.what());
    }
    if (!summary.contains("sizes") || !summary["sizes"].is_array() || summary["sizes"].empty())
        throw IoError("summary has no size cells: " + summary_path);
    for (const auto& cell : summary["sizes"])
        if (!cell.contains("m") || !cell.contains("median_top_over_sqrt_mn"))
            throw IoError("summary cell missing fields: " + summary_path);

    std::filesystem::create_directories(out_dir);
    const auto dat_path = std::filesystem::path(out_dir) / "scaling.dat";
    const auto gp_path = std::filesystem::path(out_dir) / "scaling.gp";
    std::ofstream dat(dat_path);
    if (!dat) throw IoError("cannot write " + dat_path.string());
    dat << "# m n top_over_sqrt_mn next_over_sqrt_mpn normw_over_sqrt_mpn residual_over_sqrt_mpn\n";
    auto num = [](const nlohmann::json& j, const char* key) {
        return j.contains(key) && j[key].is_number() ? j[key].get<double>()
                                                     : std::numeric_limits<double>::quiet_NaN();
    };
    for (const auto& cell : summary["sizes"]) {
        dat << cell["m"].get<Index>() << ' ' << cell["n"].get<Index>() << ' '
            << detail::format_double(num(cell, "median_top_over_sqrt_mn")) << ' '
            << detail::format_double(num(cell, "median_next_over_sqrt_mpn")) << ' '
            << detail::format_double(num(cell, "median_normw_over_sqrt_mpn")) << ' '
            << detail::format_double(num(cell, "median_residual_over_sqrt_mpn")) << '\n';
    }
    std::ofstream gp(gp_path);
    if (!gp) throw IoError("cannot write " + gp_path.string());
    gp << "# render with: gnuplot scaling.gp\n"
          "set terminal pngcairo size 960,640\n"
          "set output 'scaling.png'\n"
          "set xlabel 'm'\n"
          "set ylabel 'scaled singular values'\n"
          "set logscale x\n"
          "set key left\n"
          "plot 'scaling.dat' using 1:3 with linespoints title 's_r / sqrt(mn)', \\\n"
          "     'scaling.dat' using 1:4 with linespoints title 's_{r+1} / sqrt(m+n)', \\\n"
          "     'scaling.dat' using 1:5 with linespoints title '|W| / sqrt(m+n)', \\\n"
          "     'scaling.dat' using 1:6 with linespoints title 'residual / sqrt(m+n)'\n";
}

/// Runs the sweep and writes trials.csv, timings.csv, summary.json and the
/// plot files into out_dir. Trials are independent; up to `workers` run
/// concurrently but rows always appear in sweep-then-seed order, and
/// trials.csv is byte-stable across reruns (timings go to the sidecar).
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const Index rank = [&] {
        Eigen::VectorXd values = singular_values(cfg.pattern->entries());
        const double cutoff = static_cast<double>(std::max(cfg.pattern->row_blocks(),
                                                           cfg.pattern->col_blocks())) *
                              std::numeric_limits<double>::epsilon() * values(0);
        Index r = 0;
        while (r < values.size() && values(r) > cutoff) ++r;
        return r;
    }();
    if (rank < 1) throw ParameterError("experiment: pattern has rank zero");

    struct Cell {
        Index m, n;
        int seed_index;
    };
    std::vector<Cell> cells;
    for (auto [m, n] : cfg.sweep)
        for (int s = 0; s < cfg.seeds; ++s) cells.push_back({m, n, s});

    ExperimentResult result;
    result.trials.resize(cells.size());
    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= cells.size()) break;
            result.trials[i] = run_trial(cfg, cells[i].m, cells[i].n, cells[i].seed_index);
        }
    };
    const int threads = std::min<int>(cfg.workers, static_cast<int>(cells.size()));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (const auto& t : result.trials)
        if (t.status != "ok") result.exit_code = 1;

    std::filesystem::create_directories(cfg.out_dir);
    const auto dir = std::filesystem::path(cfg.out_dir);
    {
        std::ofstream f(dir / "trials.csv");
        if (!f) throw IoError("cannot write trials.csv in " + cfg.out_dir);
        detail::write_trials_csv(f, result.trials, rank);
    }
    {
        std::ofstream f(dir / "timings.csv");
        for (const auto& t : result.trials)
            f << t.m << ',' << t.n << ',' << t.seed_index << ','
              << detail::format_double(t.wall_time_s) << "\r\n";
    }
    result.summary = detail::summarize(cfg, result.trials, rank);
    {
        std::ofstream f(dir / "summary.json");
        if (!f) throw IoError("cannot write summary.json in " + cfg.out_dir);
        f << result.summary.dump(2) << '\n';
    }
    render_report((dir / "summary.json").string(), cfg.out_dir);
    return result;
}

/// Reads the JSON experiment config; relative pattern paths resolve against
/// the config file's directory.
inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config: " + path);
    nlohmann::json doc;
    try {
        f >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("config " + path + ": " + e.what());
    }
    ExperimentConfig cfg;
    try {
        cfg.pattern_file = doc.at("pattern_file").get<std::string>();
        std::filesystem::path pattern_path(cfg.pattern_file);
        if (pattern_path.is_relative())
            pattern_path = std::filesystem::path(path).parent_path() / pattern_path;
        PatternFile pf = load_pattern_file(pattern_path.string());
        cfg.pattern = std::move(pf.pattern);
        cfg.base_structure = std::move(pf.structure);
        for (const auto& pair : doc.at("sweep")) {
            if (!pair.is_array() || pair.size() != 2) throw IoError("config: sweep entries are [m, n]");
            cfg.sweep.emplace_back(pair[0].get<Index>(), pair[1].get<Index>());
        }
        if (doc.contains("noise")) {
            const auto& noise = doc["noise"];
            const auto kind = noise.value("kind", std::string("uniform"));
            if (kind == "none") {
                cfg.noiseless = true;
            } else if (kind == "uniform" || kind == "uniform-bounded") {
                cfg.noise_kind = NoiseKind::UniformBounded;
                cfg.noise_bound = noise.value("bound", 1.0);
                if (cfg.noise_bound == 0.0) cfg.noiseless = true; // bound 0 means no noise
                else if (!(cfg.noise_bound > 0.0))
                    throw IoError("config: uniform noise bound must be >= 0");
            } else if (kind == "bernoulli" || kind == "bernoulli-block") {
                cfg.noise_kind = NoiseKind::BernoulliBlock;
            } else if (kind == "gaussian") {
                cfg.noise_kind = NoiseKind::Gaussian;
                cfg.noise_sigma = noise.value("sigma", 1.0);
                if (!(cfg.noise_sigma > 0.0)) throw IoError("config: gaussian sigma must be positive");
            } else {
                throw IoError("config: unknown noise kind '" + kind + "'");
            }
        } else {
            cfg.noiseless = true;
        }
        cfg.seeds = doc.value("seeds", 1);
        cfg.seed_base = doc.value("seed_base", std::uint64_t{1});
        cfg.tau = doc.value("tau", 0.4);
        cfg.gap_threshold = doc.value("gap_threshold", 3.0);
        cfg.restarts = doc.value("restarts", 10);
        cfg.workers = doc.value("workers", 1);
        cfg.trial_time_limit_s = doc.value("trial_time_limit_s", 300.0);
        cfg.out_dir = doc.value("out_dir", std::string("out"));
        if (doc.contains("gc2_witness")) {
            const auto& w = doc["gc2_witness"];
            cfg.gc2_witness = {w.value("C0", 1.0), w.value("C", 1.0), w.value("D0", 1.0),
                               w.value("D", 1.0)};
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError("config " + path + ": " + e.what());
    }
    cfg.validate();
    return cfg;
}

} // namespace bicluster
