// Command-line front end: generate planted instances, decompose, detect the
// spectral gap, cluster representatives, run correspondence analysis, rebuild
// block structure, and drive seeded experiment sweeps.
//
// Exit codes: 0 success, 1 numerical failure while computing, 2 usage or IO
// error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bicluster/clustering.hpp"
#include "bicluster/correspondence.hpp"
#include "bicluster/errors.hpp"
#include "bicluster/experiment.hpp"
#include "bicluster/matrix_io.hpp"
#include "bicluster/model.hpp"
#include "bicluster/reconstruct.hpp"
#include "bicluster/spectra.hpp"

namespace {

namespace fs = std::filesystem;
using namespace bicluster;

fs::path out_file(const std::string& out_dir, const std::string& name) {
    fs::create_directories(out_dir);
    return fs::path(out_dir) / name;
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path.string());
    f << doc.dump(2) << '\n';
}

struct GenerateArgs {
    std::string pattern_file, out_dir = ".";
    Index m = 0, n = 0; // 0 keeps the sizes from the pattern file
    std::string noise_kind = "none";
    double bound = 1.0, sigma = 1.0;
    std::uint64_t seed = 1;
};

int cmd_generate(const GenerateArgs& args) {
    PatternFile pf = load_pattern_file(args.pattern_file);
    BlockStructure structure = (args.m > 0 || args.n > 0)
                                   ? pf.structure.scaled_to(args.m > 0 ? args.m : pf.structure.rows(),
                                                            args.n > 0 ? args.n : pf.structure.cols())
                                   : pf.structure;
    Eigen::MatrixXd planted = blow_up(pf.pattern, structure);
    save_matrix(out_file(args.out_dir, "B.txt").string(), planted);
    save_labels_csv(out_file(args.out_dir, "row_blocks.csv").string(), structure.row_labels());
    save_labels_csv(out_file(args.out_dir, "col_blocks.csv").string(), structure.col_labels());

    if (args.noise_kind != "none") {
        Eigen::MatrixXd noise, observed;
        if (args.noise_kind == "bernoulli" || args.noise_kind == "bernoulli-block") {
            auto sample = sample_bernoulli_noise(pf.pattern, structure, args.seed);
            observed = std::move(sample.observed);
            noise = std::move(sample.noise);
        } else if (args.noise_kind == "uniform" || args.noise_kind == "uniform-bounded") {
            noise = sample_noise(structure.rows(), structure.cols(),
                                 NoiseSpec::uniform(args.bound, args.seed));
            observed = planted + noise;
        } else if (args.noise_kind == "gaussian") {
            noise = sample_noise(structure.rows(), structure.cols(),
                                 NoiseSpec::gaussian(args.sigma, args.seed));
            observed = planted + noise;
        } else {
            throw ParameterError("unknown noise kind: " + args.noise_kind);
        }
        save_matrix(out_file(args.out_dir, "W.txt").string(), noise);
        save_matrix(out_file(args.out_dir, "A.txt").string(), observed);
    }
    return 0;
}

int cmd_svd(const std::string& in, Index k, const std::string& out_dir) {
    Eigen::MatrixXd m = load_matrix(in);
    if (k <= 0) k = std::min(m.rows(), m.cols());
    SvdResult svd = thin_svd(m, k);
    save_values(out_file(out_dir, "values.txt").string(), svd.values);
    save_matrix(out_file(out_dir, "left.txt").string(), svd.left);
    save_matrix(out_file(out_dir, "right.txt").string(), svd.right);
    return 0;
}

int cmd_gap(const std::string& values_path, Index m, Index n, double t) {
    Eigen::VectorXd values = load_values(values_path);
    GapDecision gap = detect_gap(values, m, n, t);
    nlohmann::json doc{{"k", gap.k}, {"threshold", gap.threshold}};
    if (std::isfinite(gap.gap_ratio)) doc["gap_ratio"] = gap.gap_ratio;
    std::cout << doc.dump() << '\n';
    return 0;
}

int cmd_cluster(const std::string& in, const std::string& weights_path, int k, std::uint64_t seed,
                int restarts, const std::string& out_dir) {
    Eigen::MatrixXd points = load_matrix(in);
    Eigen::VectorXd weights;
    if (!weights_path.empty()) {
        Eigen::MatrixXd w = load_matrix(weights_path);
        if (w.cols() != 1) throw DataError("weights file must have one column");
        weights = w.col(0);
    }
    Representation rep = weights.size() ? Representation(points, weights) : Representation(points);
    Clustering clus = kmeans(rep, k, seed, restarts);
    save_labels_csv(out_file(out_dir, "labels.csv").string(), clus.assignment);
    write_json(out_file(out_dir, "cluster.json"),
               {{"within_variance", clus.within_variance}, {"degenerate", clus.degenerate}});
    return 0;
}

int cmd_correspond(const std::string& in, Index k, const std::string& out_dir) {
    Eigen::MatrixXd m = load_matrix(in);
    CorrespondenceDecomposition dec = corr_transform(m);
    if (k <= 0) k = std::min<Index>(3, std::min(m.rows(), m.cols()));
    compute_corr_svd(dec, k);
    corr_vectors(dec, k);
    save_values(out_file(out_dir, "corr_values.txt").string(), dec.svd.values);

    // category coordinates: the k-1 nontrivial columns, weight last
    auto dump_coords = [&](const std::string& name, const Eigen::MatrixXd& coords,
                           const Eigen::VectorXd& sums) {
        Eigen::MatrixXd table(coords.rows(), k);
        table.leftCols(k - 1) = coords.rightCols(k - 1);
        table.col(k - 1) = sums;
        save_matrix(out_file(out_dir, name).string(), table);
    };
    dump_coords("corr_rows.csv", dec.corr_left, dec.row_sums);
    dump_coords("corr_cols.csv", dec.corr_right, dec.col_sums);
    write_json(out_file(out_dir, "corr.json"),
               {{"top_multiplicity", corr_top_multiplicity(dec.svd.values)},
                {"values", std::vector<double>(dec.svd.values.data(),
                                               dec.svd.values.data() + dec.svd.values.size())}});
    return 0;
}

int cmd_reconstruct(const std::string& in, int k, int a, int b, std::uint64_t seed, int restarts,
                    const std::string& out_dir) {
    Eigen::MatrixXd observed = load_matrix(in);
    if (a == 0 || b == 0) {
        // cluster-count heuristic, outside the theory: smallest count whose
        // next split gains less than 10%
        if (k < 1) throw ParameterError("reconstruct: k must be >= 1");
        SvdResult svd = thin_svd(observed, k);
        const int cap = 2 * k + 2;
        if (a == 0)
            a = suggest_cluster_count(representatives(svd, Side::Left, k), k,
                                      std::min<int>(cap, static_cast<int>(observed.rows())), seed,
                                      restarts);
        if (b == 0)
            b = suggest_cluster_count(representatives(svd, Side::Right, k), k,
                                      std::min<int>(cap, static_cast<int>(observed.cols())), seed,
                                      restarts);
        std::cerr << "note: using a=" << a << ", b=" << b << " from the variance-drop heuristic\n";
    }
    ReconstructionResult rec = reconstruct(observed, k, a, b, seed, restarts);
    save_matrix(out_file(out_dir, "B_hat.txt").string(), rec.b_hat);
    save_labels_csv(out_file(out_dir, "row_labels.csv").string(), rec.row_partition);
    save_labels_csv(out_file(out_dir, "col_labels.csv").string(), rec.col_partition);
    nlohmann::json report{
        {"residual_norm", rec.residual_norm},
        {"values", std::vector<double>(rec.values.data(), rec.values.data() + rec.values.size())},
        {"trailing_value", rec.trailing_value},
        {"left_alignment_error", rec.left_alignment_error},
        {"right_alignment_error", rec.right_alignment_error},
        {"weak_gap", rec.weak_gap},
        {"row_order", rec.row_order},
        {"col_order", rec.col_order},
    };
    write_json(out_file(out_dir, "report.json"), report);
    if (rec.weak_gap)
        std::cerr << "warning: weak spectral gap, the rank-" << k << " structure is doubtful\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"spectral two-way classification of noisy block matrices"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* c_gen = app.add_subcommand("generate", "blow a pattern up into matrix files");
    c_gen->add_option("--pattern", gen.pattern_file, "pattern JSON file")->required();
    c_gen->add_option("--m", gen.m, "rescale row count");
    c_gen->add_option("--n", gen.n, "rescale column count");
    c_gen->add_option("--noise", gen.noise_kind, "none|uniform|bernoulli|gaussian");
    c_gen->add_option("--bound", gen.bound, "uniform noise half-width K");
    c_gen->add_option("--sigma", gen.sigma, "gaussian noise sigma");
    c_gen->add_option("--seed", gen.seed, "noise seed");
    c_gen->add_option("--out", gen.out_dir, "output directory");

    std::string in_path, values_path, weights_path, config_path, summary_path;
    std::string out_dir = ".";
    Index k = 0, m_dim = 0, n_dim = 0;
    int k_parts = 2, a_parts = 0, b_parts = 0, restarts = 10;
    double tau = 0.4, gap_threshold = 3.0;
    std::uint64_t seed = 1;
    int workers = 0;

    auto* c_svd = app.add_subcommand("svd", "top singular triplets of a matrix");
    c_svd->add_option("--in", in_path, "matrix file")->required();
    c_svd->add_option("-k", k, "number of triplets (default: full)");
    c_svd->add_option("--out", out_dir, "output directory");

    auto* c_gap = app.add_subcommand("gap", "count protruding singular values");
    c_gap->add_option("--values", values_path, "values file, one per line")->required();
    c_gap->add_option("--m", m_dim, "row count of the source matrix")->required();
    c_gap->add_option("--n", n_dim, "column count of the source matrix")->required();
    c_gap->add_option("--gap-threshold", gap_threshold, "threshold factor t");

    auto* c_cluster = app.add_subcommand("cluster", "k-means on a representation");
    c_cluster->add_option("--in", in_path, "points file (one row per item)")->required();
    c_cluster->add_option("--weights", weights_path, "optional weights file (one column)");
    c_cluster->add_option("-k", k_parts, "number of clusters")->required();
    c_cluster->add_option("--seed", seed, "clustering seed");
    c_cluster->add_option("--restarts", restarts, "k-means restarts");
    c_cluster->add_option("--out", out_dir, "output directory");

    auto* c_corr = app.add_subcommand("correspond", "correspondence analysis of a matrix");
    c_corr->add_option("--in", in_path, "nonnegative matrix file")->required();
    c_corr->add_option("-k", k, "factors to keep (default 3)");
    c_corr->add_option("--out", out_dir, "output directory");

    auto* c_rec = app.add_subcommand("reconstruct", "rebuild the blown up structure");
    c_rec->add_option("--in", in_path, "observed matrix file")->required();
    c_rec->add_option("-k", k_parts, "protruding singular value count")->required();
    c_rec->add_option("-a", a_parts, "row cluster count (0 = variance-drop heuristic)")->required();
    c_rec->add_option("-b", b_parts, "column cluster count (0 = variance-drop heuristic)")->required();
    c_rec->add_option("--seed", seed, "clustering seed");
    c_rec->add_option("--restarts", restarts, "k-means restarts");
    c_rec->add_option("--out", out_dir, "output directory");

    auto* c_exp = app.add_subcommand("experiment", "run a seeded size sweep from a config");
    c_exp->add_option("--config", config_path, "experiment JSON config")->required();
    auto* opt_seed = c_exp->add_option("--seed", seed, "override seed_base");
    auto* opt_tau = c_exp->add_option("--tau", tau, "override tau");
    auto* opt_thr = c_exp->add_option("--gap-threshold", gap_threshold, "override threshold factor");
    auto* opt_res = c_exp->add_option("--restarts", restarts, "override k-means restarts");
    auto* opt_wrk = c_exp->add_option("--workers", workers, "override worker count");
    auto* opt_out = c_exp->add_option("--out", out_dir, "override output directory");

    auto* c_rep = app.add_subcommand("report", "render plot files from a summary");
    c_rep->add_option("--summary", summary_path, "summary.json path")->required();
    c_rep->add_option("--out", out_dir, "output directory");

    try {
        app.parse(argc, argv);

        if (c_gen->parsed()) return cmd_generate(gen);
        if (c_svd->parsed()) return cmd_svd(in_path, k, out_dir);
        if (c_gap->parsed()) return cmd_gap(values_path, m_dim, n_dim, gap_threshold);
        if (c_cluster->parsed())
            return cmd_cluster(in_path, weights_path, k_parts, seed, restarts, out_dir);
        if (c_corr->parsed()) return cmd_correspond(in_path, k, out_dir);
        if (c_rec->parsed())
            return cmd_reconstruct(in_path, k_parts, a_parts, b_parts, seed, restarts, out_dir);
        if (c_rep->parsed()) {
            render_report(summary_path, out_dir);
            return 0;
        }
        if (c_exp->parsed()) {
            ExperimentConfig cfg = load_experiment_config(config_path);
            if (*opt_seed) cfg.seed_base = seed;
            if (*opt_tau) cfg.tau = tau;
            if (*opt_thr) cfg.gap_threshold = gap_threshold;
            if (*opt_res) cfg.restarts = restarts;
            if (*opt_wrk) cfg.workers = workers;
            if (*opt_out) cfg.out_dir = out_dir;
            cfg.validate();
            ExperimentResult result = run_experiment(cfg);
            int failed = 0;
            for (const auto& t : result.trials) failed += t.status != "ok";
            std::cout << "trials: " << result.trials.size() << ", failed: " << failed
                      << ", output: " << cfg.out_dir << '\n';
            return result.exit_code;
        }
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const ParameterError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) { // structural or data failure while computing
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
