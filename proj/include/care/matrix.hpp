#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "care/errors.hpp"

namespace care {

// Dense row-major matrix of doubles. Deliberately minimal: the library only
// needs row access, column selection and row gathering.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), values(r * c, fill) {}

    double* row(std::size_t i) { return values.data() + i * cols; }
    const double* row(std::size_t i) const { return values.data() + i * cols; }

    std::span<const double> row_span(std::size_t i) const {
        return {values.data() + i * cols, cols};
    }

    double& at(std::size_t i, std::size_t j) { return values[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }

    bool all_finite() const {
        for (double v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline Matrix select_columns(const Matrix& m, std::span<const int> columns) {
    Matrix out(m.rows, columns.size());
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* src = m.row(i);
        double* dst = out.row(i);
        for (std::size_t j = 0; j < columns.size(); ++j) dst[j] = src[columns[j]];
    }
    return out;
}

inline Matrix select_rows(const Matrix& m, std::span<const int> rows) {
    Matrix out(rows.size(), m.cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double* src = m.row(static_cast<std::size_t>(rows[i]));
        double* dst = out.row(i);
        for (std::size_t j = 0; j < m.cols; ++j) dst[j] = src[j];
    }
    return out;
}

inline double squared_distance(const double* a, const double* b, std::size_t dim) {
    double s = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
        const double diff = a[j] - b[j];
        s += diff * diff;
    }
    return s;
}

}  // namespace care
