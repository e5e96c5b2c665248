#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "bicluster/matrix_io.hpp"
#include "bicluster/model.hpp"
#include "bicluster/spectra.hpp"

using namespace bicluster;
namespace fs = std::filesystem;

namespace {

const std::string kCli = BICLUSTER_CLI_PATH;

int run(const std::string& args) {
    const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

fs::path fresh_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / "bicluster_cli_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_acceptance_pattern(const fs::path& path) {
    Eigen::MatrixXd p(2, 3);
    p << 0.8, 0.2, 0.8, 0.2, 0.8, 0.8;
    save_pattern_file(path.string(), PatternMatrix(p), BlockStructure({1, 1}, {1, 1, 1}));
}

} // namespace

TEST_CASE("generate, svd, gap, cluster, reconstruct round-trip", "[cli]") {
    auto dir = fresh_dir("pipeline");
    write_acceptance_pattern(dir / "pattern.json");
    const std::string data = (dir / "data").string();

    REQUIRE(run("generate --pattern " + (dir / "pattern.json").string() +
                " --m 90 --n 90 --noise uniform --bound 0.4 --seed 5 --out " + data) == 0);
    REQUIRE(fs::exists(fs::path(data) / "B.txt"));
    REQUIRE(fs::exists(fs::path(data) / "A.txt"));
    REQUIRE(fs::exists(fs::path(data) / "W.txt"));

    const std::string svd_out = (dir / "svd").string();
    REQUIRE(run("svd --in " + data + "/A.txt -k 4 --out " + svd_out) == 0);
    Eigen::VectorXd values = load_values(svd_out + "/values.txt");
    REQUIRE(values.size() == 4);

    REQUIRE(run("gap --values " + svd_out + "/values.txt --m 90 --n 90") == 0);

    const std::string clus_out = (dir / "cluster").string();
    REQUIRE(run("cluster --in " + svd_out + "/left.txt -k 2 --seed 3 --out " + clus_out) == 0);
    auto labels = load_labels_csv(clus_out + "/labels.csv");
    REQUIRE(labels.size() == 90);

    const std::string rec_out = (dir / "rec").string();
    REQUIRE(run("reconstruct --in " + data + "/A.txt -k 2 -a 2 -b 3 --seed 3 --out " + rec_out) == 0);
    REQUIRE(fs::exists(fs::path(rec_out) / "B_hat.txt"));
    REQUIRE(fs::exists(fs::path(rec_out) / "report.json"));
    Eigen::MatrixXd b_hat = load_matrix(rec_out + "/B_hat.txt");
    REQUIRE(b_hat.rows() == 90);
}

TEST_CASE("correspond emits coordinates with weights", "[cli]") {
    auto dir = fresh_dir("correspond");
    Eigen::MatrixXd m = Eigen::MatrixXd::Ones(12, 8);
    m.block(0, 0, 6, 4).setConstant(3.0);
    save_matrix((dir / "m.txt").string(), m);
    REQUIRE(run("correspond --in " + (dir / "m.txt").string() + " -k 2 --out " +
                (dir / "out").string()) == 0);
    Eigen::MatrixXd rows = load_matrix((dir / "out" / "corr_rows.csv").string());
    REQUIRE(rows.rows() == 12);
    REQUIRE(rows.cols() == 2); // one nontrivial coordinate plus the weight
    Eigen::MatrixXd cols = load_matrix((dir / "out" / "corr_cols.csv").string());
    REQUIRE(cols.rows() == 8);
}

TEST_CASE("experiment subcommand runs a config end to end", "[cli]") {
    auto dir = fresh_dir("experiment");
    write_acceptance_pattern(dir / "pattern.json");
    nlohmann::json cfg{{"pattern_file", "pattern.json"},
                       {"sweep", {{30, 30}, {45, 45}}},
                       {"noise", {{"kind", "bernoulli"}}},
                       {"seeds", 2},
                       {"seed_base", 11},
                       {"out_dir", (dir / "out").string()}};
    std::ofstream f(dir / "cfg.json");
    f << cfg.dump();
    f.close();
    REQUIRE(run("experiment --config " + (dir / "cfg.json").string()) == 0);
    REQUIRE(fs::exists(dir / "out" / "trials.csv"));
    REQUIRE(fs::exists(dir / "out" / "summary.json"));
    REQUIRE(run("report --summary " + (dir / "out" / "summary.json").string() + " --out " +
                (dir / "report").string()) == 0);
    REQUIRE(fs::exists(dir / "report" / "scaling.gp"));
}

TEST_CASE("exit codes distinguish usage from numeric failure", "[cli]") {
    auto dir = fresh_dir("exit_codes");
    SECTION("missing subcommand or file is usage/IO: 2") {
        REQUIRE(run("") == 2);
        REQUIRE(run("svd --in /nonexistent.txt -k 1 --out " + dir.string()) == 2);
        REQUIRE(run("gap --values /nonexistent.txt --m 3 --n 3") == 2);
        REQUIRE(run("experiment --config /nonexistent.json") == 2);
    }
    SECTION("bad parameters: 2") {
        Eigen::MatrixXd m = Eigen::MatrixXd::Ones(4, 4);
        save_matrix((dir / "m.txt").string(), m);
        REQUIRE(run("svd --in " + (dir / "m.txt").string() + " -k 9 --out " + dir.string()) == 2);
        REQUIRE(run("reconstruct --in " + (dir / "m.txt").string() + " -k 0 -a 2 -b 2 --out " +
                    dir.string()) == 2);
    }
    SECTION("numeric failure while computing: 1") {
        // a matrix with a zero column cannot be degree-normalized
        Eigen::MatrixXd m = Eigen::MatrixXd::Ones(4, 4);
        m.col(1).setZero();
        save_matrix((dir / "zero_col.txt").string(), m);
        REQUIRE(run("correspond --in " + (dir / "zero_col.txt").string() + " -k 2 --out " +
                    dir.string()) == 1);
    }
}
