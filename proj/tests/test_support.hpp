#pragma once

// Shared helpers for the test suites. The scoring oracles here are written
// straight from the definitions (full pairwise sort, no shared code with the
// library kernels) so the fast paths are checked against something
// independent.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "care/matrix.hpp"
#include "care/random.hpp"

namespace testsupport {

inline care::Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                                  double lo = -1.0, double hi = 1.0) {
    care::Rng rng(seed);
    care::Matrix m(rows, cols);
    for (double& v : m.values) v = rng.uniform(lo, hi);
    return m;
}

inline double euclidean(const double* a, const double* b, std::size_t dim) {
    double s = 0.0;
    for (std::size_t j = 0; j < dim; ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
    return std::sqrt(s);
}

struct OracleNeighbors {
    std::vector<int> indices;
    std::vector<double> distances;
};

// k nearest rows of `reference` to query row q, by exhaustive sort over all
// pairwise distances (ties by lower reference index).
inline OracleNeighbors knn_oracle(const care::Matrix& queries, const care::Matrix& reference,
                                  std::size_t q, int k, int exclude = -1) {
    std::vector<std::pair<double, int>> all;
    for (std::size_t r = 0; r < reference.rows; ++r) {
        if (static_cast<int>(r) == exclude) continue;
        all.emplace_back(euclidean(queries.row(q), reference.row(r), queries.cols),
                         static_cast<int>(r));
    }
    std::sort(all.begin(), all.end());
    OracleNeighbors out;
    for (int j = 0; j < k; ++j) {
        out.indices.push_back(all[j].second);
        out.distances.push_back(all[j].first);
    }
    return out;
}

// Mean k-NN distance of every point of `data` against all of `data` with
// self excluded.
inline std::vector<double> avgknn_oracle(const care::Matrix& data, int k) {
    std::vector<double> scores(data.rows);
    for (std::size_t q = 0; q < data.rows; ++q) {
        const auto nn = knn_oracle(data, data, q, k, static_cast<int>(q));
        scores[q] = std::accumulate(nn.distances.begin(), nn.distances.end(), 0.0) / k;
    }
    return scores;
}

// Textbook local outlier factor over one set (reference = data, self
// excluded everywhere): k-distance, reachability distance, local
// reachability density, then the density ratio.
inline std::vector<double> lof_oracle(const care::Matrix& data, int k) {
    const std::size_t n = data.rows;
    std::vector<OracleNeighbors> nn(n);
    std::vector<double> kdist(n);
    for (std::size_t q = 0; q < n; ++q) {
        nn[q] = knn_oracle(data, data, q, k, static_cast<int>(q));
        kdist[q] = nn[q].distances.back();
    }
    std::vector<double> lrd(n);
    for (std::size_t q = 0; q < n; ++q) {
        double reach_sum = 0.0;
        for (int j = 0; j < k; ++j) {
            reach_sum += std::max(kdist[nn[q].indices[j]], nn[q].distances[j]);
        }
        const double mean = reach_sum / k;
        lrd[q] = mean > 0.0 ? 1.0 / mean : 1e12;
    }
    std::vector<double> lof(n);
    for (std::size_t q = 0; q < n; ++q) {
        double ratio = 0.0;
        for (int j = 0; j < k; ++j) ratio += lrd[nn[q].indices[j]];
        lof[q] = ratio / (k * lrd[q]);
    }
    return lof;
}

inline double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Pearson chi-square statistic for observed counts against equal expected
// frequencies.
inline double chi_square_uniform(const std::vector<double>& observed) {
    const double expected = mean_of(observed);
    double stat = 0.0;
    for (double o : observed) stat += (o - expected) * (o - expected) / expected;
    return stat;
}

// Upper critical values of the chi-square distribution at alpha = 0.001.
inline double chi_square_critical_001(int df) {
    switch (df) {
        case 1: return 10.828;
        case 2: return 13.816;
        case 5: return 20.515;
        case 9: return 27.877;
        case 11: return 31.264;
        default: break;
    }
    throw std::runtime_error("chi_square_critical_001: df not tabulated");
}

}  // namespace testsupport
