#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "bicluster/errors.hpp"
#include "bicluster/model.hpp"

namespace bicluster {

namespace detail {

/// Shortest decimal form that round-trips an IEEE double (17 significant digits).
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_double(std::string_view field, const char* context) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size())
        throw IoError(std::string(context) + ": bad number '" + std::string(field) + "'");
    return v;
}

inline std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

} // namespace detail

/// Plain text matrix: a "m n" header line, then m lines of n space-separated
/// values at 17 significant digits (round-trips bit-exactly).
inline void write_matrix_text(std::ostream& os, const Eigen::MatrixXd& m) {
    os << m.rows() << ' ' << m.cols() << '\n';
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) os << ' ';
            os << detail::format_double(m(i, j));
        }
        os << '\n';
    }
}

inline Eigen::MatrixXd read_matrix_text(std::istream& is) {
    Index rows = 0, cols = 0;
    if (!(is >> rows >> cols) || rows < 1 || cols < 1)
        throw IoError("matrix text: bad or missing 'm n' header");
    Eigen::MatrixXd m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) {
            std::string tok;
            if (!(is >> tok)) throw IoError("matrix text: fewer entries than the header promises");
            m(i, j) = detail::parse_double(tok, "matrix text");
        }
    return m;
}

/// RFC 4180 numeric CSV, no header: comma-separated fields, CRLF line ends on
/// write; CR, LF and CRLF all accepted on read.
inline void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m) {
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) os << ',';
            os << detail::format_double(m(i, j));
        }
        os << "\r\n";
    }
}

inline Eigen::MatrixXd read_matrix_csv(std::istream& is) {
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(is, line)) {
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        std::vector<double> row;
        std::size_t start = 0;
        while (true) {
            std::size_t comma = line.find(',', start);
            std::string_view field(line.data() + start,
                                   (comma == std::string::npos ? line.size() : comma) - start);
            row.push_back(detail::parse_double(field, "csv"));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw IoError("csv: ragged rows");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError("csv: empty input");
    Eigen::MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j)
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
}

/// Dispatch on extension: ".csv" uses the CSV codec, anything else the text
/// format.
inline Eigen::MatrixXd load_matrix(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open matrix file: " + path);
    Eigen::MatrixXd m = std::filesystem::path(path).extension() == ".csv" ? read_matrix_csv(f)
                                                                          : read_matrix_text(f);
    if (!m.allFinite()) throw DataError("matrix file has non-finite entries: " + path);
    return m;
}

inline void save_matrix(const std::string& path, const Eigen::MatrixXd& m) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write matrix file: " + path);
    if (std::filesystem::path(path).extension() == ".csv")
        write_matrix_csv(f, m);
    else
        write_matrix_text(f, m);
    if (!f) throw IoError("write failed: " + path);
}

/// Pattern plus block sizes, as stored in the small JSON document
/// {"pattern": [[...]], "row_sizes": [...], "col_sizes": [...]}.
struct PatternFile {
    PatternMatrix pattern;
    BlockStructure structure;
};

inline PatternFile parse_pattern_json(const nlohmann::json& doc) {
    try {
        auto grid = doc.at("pattern").get<std::vector<std::vector<double>>>();
        if (grid.empty() || grid.front().empty()) throw IoError("pattern file: empty pattern");
        Eigen::MatrixXd p(static_cast<Index>(grid.size()), static_cast<Index>(grid.front().size()));
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (grid[i].size() != grid.front().size()) throw IoError("pattern file: ragged pattern");
            for (std::size_t j = 0; j < grid[i].size(); ++j)
                p(static_cast<Index>(i), static_cast<Index>(j)) = grid[i][j];
        }
        auto rs = doc.at("row_sizes").get<std::vector<Index>>();
        auto cs = doc.at("col_sizes").get<std::vector<Index>>();
        return PatternFile{PatternMatrix(p), BlockStructure(rs, cs)};
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("pattern file: ") + e.what());
    }
}

inline PatternFile load_pattern_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open pattern file: " + path);
    nlohmann::json doc;
    try {
        f >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("pattern file " + path + ": " + e.what());
    }
    auto pf = parse_pattern_json(doc);
    if (pf.structure.row_blocks() != pf.pattern.row_blocks() ||
        pf.structure.col_blocks() != pf.pattern.col_blocks())
        throw IoError("pattern file " + path + ": sizes do not match the pattern shape");
    return pf;
}

inline void save_pattern_file(const std::string& path, const PatternMatrix& p,
                              const BlockStructure& bs) {
    nlohmann::json doc;
    auto& grid = doc["pattern"];
    for (Index i = 0; i < p.row_blocks(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Index j = 0; j < p.col_blocks(); ++j) row.push_back(p(i, j));
        grid.push_back(row);
    }
    doc["row_sizes"] = bs.row_sizes();
    doc["col_sizes"] = bs.col_sizes();
    std::ofstream f(path);
    if (!f) throw IoError("cannot write pattern file: " + path);
    f << doc.dump(2) << '\n';
}

/// Partition CSV: one "index,label" row per item, 0-based, no header.
inline void save_labels_csv(const std::string& path, const std::vector<int>& labels) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write labels file: " + path);
    for (std::size_t i = 0; i < labels.size(); ++i) f << i << ',' << labels[i] << "\r\n";
}

inline std::vector<int> load_labels_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open labels file: " + path);
    std::vector<int> labels;
    std::string line;
    while (std::getline(f, line)) {
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos) throw IoError("labels file: missing comma");
        auto idx = static_cast<std::size_t>(detail::parse_double(
            std::string_view(line.data(), comma), "labels"));
        int label = static_cast<int>(detail::parse_double(
            std::string_view(line.data() + comma + 1, line.size() - comma - 1), "labels"));
        if (idx != labels.size()) throw IoError("labels file: indices must be consecutive from 0");
        labels.push_back(label);
    }
    return labels;
}

/// Singular values: one number per line.
inline void save_values(const std::string& path, const Eigen::VectorXd& v) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write values file: " + path);
    for (Index i = 0; i < v.size(); ++i) f << detail::format_double(v(i)) << '\n';
}

inline Eigen::VectorXd load_values(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open values file: " + path);
    std::vector<double> vals;
    std::string line;
    while (std::getline(f, line)) {
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        vals.push_back(detail::parse_double(line, "values"));
    }
    Eigen::VectorXd v(static_cast<Index>(vals.size()));
    for (Index i = 0; i < v.size(); ++i) v(i) = vals[static_cast<std::size_t>(i)];
    return v;
}

} // namespace bicluster
