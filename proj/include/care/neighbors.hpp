#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "care/errors.hpp"
#include "care/matrix.hpp"
#include "care/parallel.hpp"

namespace care {

/// Exact k-nearest-neighbor answers: one row per query, reference indices
/// and Euclidean distances sorted ascending, ties broken by lower reference
/// index.
struct NeighborList {
    std::size_t num_queries = 0;
    std::size_t k = 0;
    std::vector<int> indices;        // num_queries x k, row-major
    std::vector<double> distances;   // num_queries x k, row-major

    std::span<const int> indices_row(std::size_t q) const {
        return {indices.data() + q * k, k};
    }
    std::span<const double> distances_row(std::size_t q) const {
        return {distances.data() + q * k, k};
    }
};

/// Brute-force exact kNN of every query row against the reference rows.
/// `self_exclusion`, when non-empty, gives per query the reference row that
/// must never be returned for it (-1 for none). Both matrices must already
/// live in the same feature subspace.
inline NeighborList knn_query(const Matrix& queries, const Matrix& reference, int k,
                              std::span<const int> self_exclusion = {}, int threads = 1) {
    if (k < 1) throw ParameterError("knn_query: k must be at least 1");
    if (queries.cols != reference.cols) {
        throw ParameterError("knn_query: queries and reference disagree on dimensionality");
    }
    if (!self_exclusion.empty() && self_exclusion.size() != queries.rows) {
        throw ParameterError("knn_query: self_exclusion size must match query count");
    }
    const std::size_t nref = reference.rows;
    const bool any_excluded = !self_exclusion.empty();
    bool has_real_exclusion = false;
    for (int e : self_exclusion) {
        if (e >= 0) {
            has_real_exclusion = true;
            break;
        }
    }
    const std::size_t min_available = has_real_exclusion ? nref - 1 : nref;
    if (static_cast<std::size_t>(k) > min_available) {
        throw ParameterError("knn_query: k exceeds available reference points");
    }

    NeighborList out;
    out.num_queries = queries.rows;
    out.k = static_cast<std::size_t>(k);
    out.indices.resize(queries.rows * out.k);
    out.distances.resize(queries.rows * out.k);

    const std::size_t dim = queries.cols;
    parallel_for(queries.rows, threads, [&](std::size_t begin, std::size_t end) {
        std::vector<std::pair<double, int>> cand(nref);
        for (std::size_t q = begin; q < end; ++q) {
            const double* qrow = queries.row(q);
            const int excluded = any_excluded ? self_exclusion[q] : -1;
            std::size_t m = 0;
            for (std::size_t r = 0; r < nref; ++r) {
                if (static_cast<int>(r) == excluded) continue;
                cand[m++] = {squared_distance(qrow, reference.row(r), dim),
                             static_cast<int>(r)};
            }
            const std::size_t kk = out.k;
            std::partial_sort(cand.begin(), cand.begin() + kk, cand.begin() + m);
            int* idst = out.indices.data() + q * kk;
            double* ddst = out.distances.data() + q * kk;
            for (std::size_t j = 0; j < kk; ++j) {
                idst[j] = cand[j].second;
                ddst[j] = std::sqrt(cand[j].first);
            }
        }
    });
    return out;
}

}  // namespace care
