#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "care/errors.hpp"
#include "care/matrix.hpp"
#include "care/neighbors.hpp"
#include "care/random.hpp"

namespace care {

enum class DetectorKind { AvgKnn, Lof };

inline const char* to_string(DetectorKind kind) {
    return kind == DetectorKind::AvgKnn ? "avgknn" : "lof";
}

/// A strictly increasing subset of feature indices defining one base
/// detector's subspace.
struct FeatureBag {
    std::vector<int> selected;

    std::size_t q() const { return selected.size(); }

    // Full feature set; used by the plain (non-bagged) detectors.
    static FeatureBag all(int d) {
        FeatureBag bag;
        bag.selected.resize(d);
        std::iota(bag.selected.begin(), bag.selected.end(), 0);
        return bag;
    }
};

/// Per-point outlierness (larger = more outlying) of every dataset point,
/// scored against a reference sample.
struct RawScores {
    std::vector<double> values;
    DetectorKind detector_kind = DetectorKind::AvgKnn;
    FeatureBag bag;
};

/// Draws b random feature bags: bag size q uniform in [ceil(d/2), d-1],
/// then q distinct features uniformly without replacement, kept sorted.
inline std::vector<FeatureBag> make_feature_bags(int d, int b, std::uint64_t rng_seed) {
    if (d < 2) throw ParameterError("make_feature_bags: d must be at least 2");
    if (b < 1) throw ParameterError("make_feature_bags: b must be at least 1");
    const int q_lo = (d + 1) / 2;
    const int q_hi = d - 1;

    Rng rng(rng_seed);
    std::vector<FeatureBag> bags(b);
    for (int i = 0; i < b; ++i) {
        const int q = static_cast<int>(rng.uniform_int(q_lo, q_hi));
        bags[i].selected = sample_without_replacement(d, q, rng);
        std::sort(bags[i].selected.begin(), bags[i].selected.end());
    }
    return bags;
}

namespace detail {

// Maps each data row to its position inside `sample` (-1 when absent), so a
// point scored against a sample containing itself never matches itself.
inline std::vector<int> self_positions(std::size_t n, std::span<const int> sample) {
    std::vector<int> pos(n, -1);
    for (std::size_t s = 0; s < sample.size(); ++s) pos[sample[s]] = static_cast<int>(s);
    return pos;
}

inline void check_finite(const std::vector<double>& values, const char* what) {
    for (double v : values) {
        if (!std::isfinite(v)) throw NumericalError(std::string(what) + ": non-finite score");
    }
}

constexpr double kLrdEpsilon = 1e-12;

// Local reachability density from one neighbor row: 1 / mean reachability
// distance, where reach(x, o) = max(kdist(o), dist(x, o)). Co-located
// clusters hit a zero mean; those collapse to 1/epsilon so their mutual
// density ratios stay at 1.
inline double local_reachability_density(std::span<const int> neighbors,
                                         std::span<const double> distances,
                                         const std::vector<double>& kdist) {
    double sum = 0.0;
    for (std::size_t j = 0; j < neighbors.size(); ++j) {
        sum += std::max(kdist[neighbors[j]], distances[j]);
    }
    const double mean = sum / static_cast<double>(neighbors.size());
    return mean > 0.0 ? 1.0 / mean : 1.0 / kLrdEpsilon;
}

}  // namespace detail

/// Mean distance to the k nearest reference points, one score per query row.
/// `self_exclusion` as in knn_query.
inline RawScores avgknn_score(const Matrix& queries, const Matrix& reference, int k,
                              std::span<const int> self_exclusion = {}, int threads = 1) {
    const NeighborList nn = knn_query(queries, reference, k, self_exclusion, threads);
    RawScores out;
    out.detector_kind = DetectorKind::AvgKnn;
    out.bag = FeatureBag::all(static_cast<int>(queries.cols));
    out.values.resize(queries.rows);
    for (std::size_t q = 0; q < queries.rows; ++q) {
        const auto dist = nn.distances_row(q);
        out.values[q] =
            std::accumulate(dist.begin(), dist.end(), 0.0) / static_cast<double>(k);
    }
    detail::check_finite(out.values, "avgknn_score");
    return out;
}

/// Local outlier factor of every query row with respect to the reference
/// sample: the ratio of the neighbors' local reachability density to the
/// query's own. Scores near 1 mean the query sits in density typical of its
/// neighborhood.
inline RawScores lof_score(const Matrix& queries, const Matrix& reference, int k,
                           std::span<const int> self_exclusion = {}, int threads = 1) {
    if (reference.rows <= static_cast<std::size_t>(k)) {
        throw ParameterError("lof_score: reference sample must exceed k points");
    }

    // Neighborhoods inside the reference (self excluded) give each reference
    // point its k-distance and local reachability density.
    std::vector<int> identity(reference.rows);
    std::iota(identity.begin(), identity.end(), 0);
    const NeighborList ref_nn = knn_query(reference, reference, k, identity, threads);

    std::vector<double> kdist(reference.rows);
    for (std::size_t r = 0; r < reference.rows; ++r) {
        kdist[r] = ref_nn.distances_row(r)[static_cast<std::size_t>(k) - 1];
    }
    std::vector<double> ref_lrd(reference.rows);
    for (std::size_t r = 0; r < reference.rows; ++r) {
        ref_lrd[r] = detail::local_reachability_density(ref_nn.indices_row(r),
                                                        ref_nn.distances_row(r), kdist);
    }

    const NeighborList nn = knn_query(queries, reference, k, self_exclusion, threads);
    RawScores out;
    out.detector_kind = DetectorKind::Lof;
    out.bag = FeatureBag::all(static_cast<int>(queries.cols));
    out.values.resize(queries.rows);
    for (std::size_t q = 0; q < queries.rows; ++q) {
        const auto idx = nn.indices_row(q);
        const auto dist = nn.distances_row(q);
        const double lrd_q = detail::local_reachability_density(idx, dist, kdist);
        double ratio_sum = 0.0;
        for (int r : idx) ratio_sum += ref_lrd[r];
        out.values[q] = ratio_sum / (static_cast<double>(k) * lrd_q);
    }
    detail::check_finite(out.values, "lof_score");
    return out;
}

/// Scores all dataset points against the rows named by `sample`, restricted
/// to the bag's features. Points that belong to the sample never count as
/// their own neighbor.
inline RawScores score_detector(DetectorKind kind, const Matrix& data,
                                std::span<const int> sample, int k, const FeatureBag& bag,
                                int threads = 1) {
    if (sample.size() <= static_cast<std::size_t>(k)) {
        throw ParameterError("score_detector: sample must exceed k points");
    }
    const Matrix projected = select_columns(data, bag.selected);
    const Matrix reference = select_rows(projected, sample);
    const std::vector<int> exclusion = detail::self_positions(data.rows, sample);

    RawScores scores = kind == DetectorKind::AvgKnn
                           ? avgknn_score(projected, reference, k, exclusion, threads)
                           : lof_score(projected, reference, k, exclusion, threads);
    scores.bag = bag;
    return scores;
}

inline RawScores avgknn_score(const Matrix& data, std::span<const int> sample, int k,
                              const FeatureBag& bag, int threads = 1) {
    return score_detector(DetectorKind::AvgKnn, data, sample, k, bag, threads);
}

inline RawScores lof_score(const Matrix& data, std::span<const int> sample, int k,
                           const FeatureBag& bag, int threads = 1) {
    return score_detector(DetectorKind::Lof, data, sample, k, bag, threads);
}

}  // namespace care
