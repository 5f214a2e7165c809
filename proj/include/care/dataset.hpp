#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "care/errors.hpp"
#include "care/matrix.hpp"

namespace care {

/// A fixed collection of points in a d-dimensional feature space, with
/// optional {0,1} ground-truth labels (1 = outlier) used only by evaluation.
struct Dataset {
    Matrix points;
    std::optional<std::vector<int>> labels;
    std::optional<std::vector<std::string>> feature_names;

    std::size_t size() const { return points.rows; }
    std::size_t dim() const { return points.cols; }
};

inline void validate(const Dataset& ds) {
    if (ds.points.rows < 2) throw ValidationError("dataset must contain at least 2 points");
    if (ds.points.cols < 1) throw ValidationError("dataset must have at least 1 feature");
    for (std::size_t i = 0; i < ds.points.rows; ++i) {
        const double* row = ds.points.row(i);
        for (std::size_t j = 0; j < ds.points.cols; ++j) {
            if (!std::isfinite(row[j])) {
                throw ValidationError("non-finite value at row " + std::to_string(i + 1) +
                                      ", column " + std::to_string(j + 1));
            }
        }
    }
    if (ds.labels) {
        if (ds.labels->size() != ds.points.rows) {
            throw ValidationError("label count does not match point count");
        }
        for (int y : *ds.labels) {
            if (y != 0 && y != 1) throw ValidationError("labels must be 0 or 1");
        }
    }
    if (ds.feature_names && ds.feature_names->size() != ds.points.cols) {
        throw ValidationError("feature name count does not match dimensionality");
    }
}

/// Selects the label column of a CSV file: by 0-based index (negative counts
/// from the end, -1 = last) or by header name.
using LabelColumn = std::variant<int, std::string>;

struct CsvOptions {
    char delimiter = ',';
    std::optional<LabelColumn> label_column;
    // When set, a label cell equal to this token maps to 1 and anything else
    // to 0. Otherwise label cells must parse to exactly 0 or 1.
    std::optional<std::string> positive_label;
};

namespace detail {

inline bool parse_double(const std::string& text, double& out) {
    const char* begin = text.data();
    const char* end = begin + text.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t')) --end;
    if (begin == end) return false;
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

inline std::vector<std::string> split_line(const std::string& line, char delimiter) {
    std::vector<std::string> fields;
    std::string field;
    for (char ch : line) {
        if (ch == delimiter) {
            fields.push_back(field);
            field.clear();
        } else {
            field.push_back(ch);
        }
    }
    fields.push_back(field);
    return fields;
}

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

}  // namespace detail

/// Loads a rectangular numeric table. A non-numeric first line is treated as
/// a header row. Error locations are 1-based (row = data row, header
/// excluded). Quoting is not supported; the format is plain delimited text.
inline Dataset load_csv(const std::string& path, const CsvOptions& options = {}) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open file: " + path);

    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    while (!lines.empty() && detail::trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) throw ValidationError("empty file: " + path);

    const std::size_t ncols = detail::split_line(lines[0], options.delimiter).size();

    // Resolve the label column index early when given as an index, so header
    // detection can ignore text in that column when a positive token is set.
    auto resolve_index = [&](int idx) -> std::size_t {
        const long long n = static_cast<long long>(ncols);
        long long r = idx < 0 ? n + idx : idx;
        if (r < 0 || r >= n) throw ParameterError("label column index out of range");
        return static_cast<std::size_t>(r);
    };

    std::optional<std::size_t> label_idx;
    bool label_by_name = false;
    std::string label_name;
    if (options.label_column) {
        if (std::holds_alternative<int>(*options.label_column)) {
            label_idx = resolve_index(std::get<int>(*options.label_column));
        } else {
            label_by_name = true;
            label_name = std::get<std::string>(*options.label_column);
        }
    }

    // Header detection: the first line is a header if any cell outside a
    // text-valued label column fails to parse as a number.
    bool has_header = false;
    {
        const auto fields = detail::split_line(lines[0], options.delimiter);
        for (std::size_t j = 0; j < fields.size(); ++j) {
            if (!label_by_name && options.positive_label && label_idx && j == *label_idx) continue;
            double v;
            if (!detail::parse_double(fields[j], v)) {
                has_header = true;
                break;
            }
        }
    }
    if (label_by_name && !has_header) {
        throw ParameterError("label column given by name but the file has no header row");
    }

    std::vector<std::string> header;
    std::size_t first_data = 0;
    if (has_header) {
        header = detail::split_line(lines[0], options.delimiter);
        for (auto& h : header) h = detail::trim(h);
        first_data = 1;
    }
    if (label_by_name) {
        for (std::size_t j = 0; j < header.size(); ++j) {
            if (header[j] == label_name) {
                label_idx = j;
                break;
            }
        }
        if (!label_idx) throw ParameterError("label column '" + label_name + "' not found in header");
    }

    const std::size_t nrows = lines.size() - first_data;
    if (nrows == 0) throw ValidationError("no data rows in file: " + path);
    const std::size_t d = ncols - (label_idx ? 1 : 0);
    if (d == 0) throw ValidationError("no feature columns remain after removing the label column");

    Dataset ds;
    ds.points = Matrix(nrows, d);
    std::vector<int> labels;
    if (label_idx) labels.reserve(nrows);

    for (std::size_t r = 0; r < nrows; ++r) {
        const auto fields = detail::split_line(lines[first_data + r], options.delimiter);
        if (fields.size() != ncols) {
            std::ostringstream msg;
            msg << "ragged row " << (r + 1) << ": expected " << ncols << " fields, found "
                << fields.size();
            throw ParseError(msg.str(), r + 1, fields.size());
        }
        double* dst = ds.points.row(r);
        std::size_t fj = 0;
        for (std::size_t j = 0; j < ncols; ++j) {
            if (label_idx && j == *label_idx) {
                const std::string cell = detail::trim(fields[j]);
                if (options.positive_label) {
                    labels.push_back(cell == *options.positive_label ? 1 : 0);
                } else {
                    double v;
                    if (!detail::parse_double(cell, v) || (v != 0.0 && v != 1.0)) {
                        throw ParseError("label cell is not 0 or 1 at row " + std::to_string(r + 1) +
                                             ", column " + std::to_string(j + 1),
                                         r + 1, j + 1);
                    }
                    labels.push_back(static_cast<int>(v));
                }
                continue;
            }
            double v;
            if (!detail::parse_double(fields[j], v)) {
                throw ParseError("cannot parse numeric cell at row " + std::to_string(r + 1) +
                                     ", column " + std::to_string(j + 1),
                                 r + 1, j + 1);
            }
            if (!std::isfinite(v)) {
                throw ValidationError("non-finite value at row " + std::to_string(r + 1) +
                                      ", column " + std::to_string(j + 1));
            }
            dst[fj++] = v;
        }
    }

    if (label_idx) ds.labels = std::move(labels);
    if (has_header) {
        std::vector<std::string> names;
        for (std::size_t j = 0; j < ncols; ++j) {
            if (label_idx && j == *label_idx) continue;
            names.push_back(header[j]);
        }
        ds.feature_names = std::move(names);
    }

    validate(ds);
    return ds;
}

/// Writes the dataset as delimited text with full double precision, so a
/// write/read round trip is value-identical. The label column, when present,
/// is appended last.
inline void save_csv(const Dataset& ds, const std::string& path, char delimiter = ',') {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot open file for writing: " + path);

    if (ds.feature_names) {
        for (std::size_t j = 0; j < ds.feature_names->size(); ++j) {
            if (j) out << delimiter;
            out << (*ds.feature_names)[j];
        }
        if (ds.labels) out << delimiter << "label";
        out << '\n';
    }

    char buf[64];
    for (std::size_t i = 0; i < ds.points.rows; ++i) {
        const double* row = ds.points.row(i);
        for (std::size_t j = 0; j < ds.points.cols; ++j) {
            if (j) out << delimiter;
            std::snprintf(buf, sizeof(buf), "%.17g", row[j]);
            out << buf;
        }
        if (ds.labels) out << delimiter << (*ds.labels)[i];
        out << '\n';
    }
    if (!out) throw ValidationError("failed while writing: " + path);
}

}  // namespace care
