#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <span>
#include <vector>

#include "care/errors.hpp"
#include "care/matrix.hpp"
#include "care/scaling.hpp"

namespace care {

/// Pairwise agreement rates of b binary detectors, measured only over the
/// union U of points flagged by at least one of them, plus the CCDF-AUC of
/// the off-diagonal rates used by the stopping rule.
struct AgreementSummary {
    Matrix rates;                    // b x b, symmetric, unit diagonal
    std::vector<int> union_indices;  // U, ascending
    double ccdf_auc = 0.0;

    std::size_t detector_count() const { return rates.rows; }

    std::vector<double> upper_triangle() const {
        std::vector<double> out;
        out.reserve(rates.rows * (rates.rows - 1) / 2);
        for (std::size_t i = 0; i < rates.rows; ++i)
            for (std::size_t j = i + 1; j < rates.rows; ++j) out.push_back(rates.at(i, j));
        return out;
    }
};

/// Area under the complementary cumulative distribution of values in [0,1],
/// integrated exactly from the empirical step function. For such values this
/// equals the sample mean; the step integration is kept as the definition.
inline double ccdf_auc(std::span<const double> values) {
    if (values.empty()) throw ParameterError("ccdf_auc: empty input");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double m = static_cast<double>(sorted.size());

    // On (v_{i-1}, v_i) the survival function equals (m - i + 1) / m.
    double area = 0.0;
    double prev = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        area += (sorted[i] - prev) * (m - static_cast<double>(i)) / m;
        prev = sorted[i];
    }
    return area;
}

/// Computes U and the b x b agreement-rate matrix a_ij = fraction of points
/// in U where detectors i and j emit the same label. Throws EmptyUnionError
/// when no detector flagged anything.
inline AgreementSummary pairwise_agreement(
    const std::vector<std::vector<std::uint8_t>>& outputs) {
    const std::size_t b = outputs.size();
    if (b < 2) throw ParameterError("pairwise_agreement: need at least 2 detectors");
    const std::size_t n = outputs[0].size();
    for (const auto& row : outputs) {
        if (row.size() != n) throw ParameterError("pairwise_agreement: ragged output matrix");
    }

    std::vector<int> flagged;
    for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t i = 0; i < b; ++i) {
            if (outputs[i][x]) {
                flagged.push_back(static_cast<int>(x));
                break;
            }
        }
    }
    if (flagged.empty()) throw EmptyUnionError();

    // Pack each detector's labels over U into 64-bit blocks; agreement
    // counting becomes XOR + popcount.
    const std::size_t u = flagged.size();
    const std::size_t words = (u + 63) / 64;
    std::vector<std::uint64_t> bits(b * words, 0);
    for (std::size_t i = 0; i < b; ++i) {
        std::uint64_t* row = bits.data() + i * words;
        for (std::size_t p = 0; p < u; ++p) {
            if (outputs[i][flagged[p]]) row[p / 64] |= (std::uint64_t{1} << (p % 64));
        }
    }

    AgreementSummary summary;
    summary.rates = Matrix(b, b, 1.0);
    for (std::size_t i = 0; i < b; ++i) {
        const std::uint64_t* ri = bits.data() + i * words;
        for (std::size_t j = i + 1; j < b; ++j) {
            const std::uint64_t* rj = bits.data() + j * words;
            std::size_t mismatches = 0;
            for (std::size_t w = 0; w < words; ++w) {
                mismatches += static_cast<std::size_t>(std::popcount(ri[w] ^ rj[w]));
            }
            const double rate =
                static_cast<double>(u - mismatches) / static_cast<double>(u);
            summary.rates.at(i, j) = rate;
            summary.rates.at(j, i) = rate;
        }
    }
    summary.union_indices = std::move(flagged);
    summary.ccdf_auc = ccdf_auc(summary.upper_triangle());
    return summary;
}

inline AgreementSummary pairwise_agreement(const std::vector<BinaryLabels>& labels) {
    std::vector<std::vector<std::uint8_t>> outputs;
    outputs.reserve(labels.size());
    for (const auto& l : labels) outputs.push_back(l.values);
    return pairwise_agreement(outputs);
}

}  // namespace care
