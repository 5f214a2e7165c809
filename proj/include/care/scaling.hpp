#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "care/detectors.hpp"
#include "care/errors.hpp"

namespace care {

/// Scores mapped into [0, 1], monotone in the underlying raw scores.
struct ProbScores {
    std::vector<double> values;
};

/// Binary outlier labels produced by thresholding a score vector; label 1
/// iff score >= threshold.
struct BinaryLabels {
    std::vector<std::uint8_t> values;
    double threshold = 0.0;
};

namespace detail {

struct Moments {
    double mean = 0.0;
    double stddev = 0.0;  // population convention (divide by n)
};

inline Moments population_moments(std::span<const double> values) {
    Moments m;
    const double n = static_cast<double>(values.size());
    for (double v : values) m.mean += v;
    m.mean /= n;
    double ss = 0.0;
    for (double v : values) {
        const double d = v - m.mean;
        ss += d * d;
    }
    m.stddev = std::sqrt(ss / n);
    return m;
}

}  // namespace detail

/// Converts raw outlierness scores to probabilities via the error function
/// of the standardized score: p = max(0, erf((s - mean) / (stddev * sqrt 2))).
/// A constant input (stddev 0) maps to all zeros.
inline ProbScores gaussian_scale(std::span<const double> raw) {
    if (raw.size() < 2) throw ParameterError("gaussian_scale: need at least 2 scores");
    const auto m = detail::population_moments(raw);

    ProbScores out;
    out.values.resize(raw.size());
    if (m.stddev == 0.0) return out;

    const double denom = m.stddev * std::numbers::sqrt2;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        out.values[i] = std::max(0.0, std::erf((raw[i] - m.mean) / denom));
    }
    return out;
}

inline ProbScores gaussian_scale(const RawScores& raw) { return gaussian_scale(raw.values); }

inline double cantelli_lambda(double confidence) {
    if (!(confidence > 0.0 && confidence < 1.0)) {
        throw ParameterError("confidence must lie in (0, 1)");
    }
    return std::sqrt(1.0 / confidence - 1.0);
}

/// One-sided tail cutoff at mean + lambda * stddev, where lambda makes the
/// one-sided Chebyshev bound 1/(1 + lambda^2) equal the confidence level
/// (confidence 0.2 gives lambda 2). Labels use >= at the threshold; a
/// constant input flags nothing and reports an infinite threshold.
inline BinaryLabels cantelli_threshold(std::span<const double> scores, double confidence = 0.2) {
    const double lambda = cantelli_lambda(confidence);
    if (scores.size() < 2) throw ParameterError("cantelli_threshold: need at least 2 scores");

    BinaryLabels out;
    out.values.assign(scores.size(), 0);
    const auto m = detail::population_moments(scores);
    if (m.stddev == 0.0) {
        out.threshold = std::numeric_limits<double>::infinity();
        return out;
    }
    out.threshold = m.mean + lambda * m.stddev;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out.values[i] = scores[i] >= out.threshold ? 1 : 0;
    }
    return out;
}

}  // namespace care
