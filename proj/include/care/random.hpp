#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "care/errors.hpp"

namespace care {

// SplitMix64 step; used to whiten seeds and derive substreams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives an independent child seed from a master seed and up to three
/// stream identifiers. Serial and parallel execution of substreams produce
/// identical results because every consumer owns its own derived stream.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t a,
                                   std::uint64_t b = 0, std::uint64_t c = 0) {
    std::uint64_t s = seed;
    std::uint64_t h = splitmix64(s);
    s ^= a * 0x9e3779b97f4a7c15ULL;
    h ^= splitmix64(s);
    s ^= b * 0xc2b2ae3d27d4eb4fULL;
    h ^= splitmix64(s);
    s ^= c * 0x165667b19e3779f9ULL;
    h ^= splitmix64(s);
    return h;
}

// Seeded pseudo-random source. The engine (mt19937_64) is fully specified by
// the standard and all distributions below are implemented here, so streams
// are reproducible across platforms and standard-library versions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(whiten(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Uniform integer in [0, bound); unbiased via rejection.
    std::uint64_t uniform_index(std::uint64_t bound) {
        if (bound == 0) throw ParameterError("uniform_index: bound must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % bound;
    }

    // Uniform integer in [lo, hi] inclusive.
    long long uniform_int(long long lo, long long hi) {
        if (lo > hi) throw ParameterError("uniform_int: empty range");
        return lo + static_cast<long long>(
                        uniform_index(static_cast<std::uint64_t>(hi - lo) + 1));
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Standard normal via Box-Muller. The sine partner is discarded so each
    // draw consumes exactly two uniforms.
    double normal() {
        const double u1 = 1.0 - uniform01();  // (0, 1]
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    // Pareto variate with minimum 1: X = U^(-1/shape), X >= 1.
    double pareto(double shape) {
        const double u = 1.0 - uniform01();  // (0, 1]
        return std::pow(u, -1.0 / shape);
    }

private:
    static std::uint64_t whiten(std::uint64_t seed) {
        std::uint64_t s = seed;
        return splitmix64(s);
    }

    std::mt19937_64 engine_;
};

// Fenwick tree over nonnegative weights; supports prefix sums and the
// "first index whose cumulative weight exceeds u" search used by sequential
// weighted sampling.
class FenwickTree {
public:
    explicit FenwickTree(std::span<const double> weights)
        : n_(weights.size()), tree_(weights.size() + 1, 0.0) {
        for (std::size_t i = 0; i < n_; ++i) tree_[i + 1] = weights[i];
        for (std::size_t i = 1; i <= n_; ++i) {
            const std::size_t parent = i + (i & (~i + 1));
            if (parent <= n_) tree_[parent] += tree_[i];
        }
        top_ = 1;
        while ((top_ << 1) <= n_) top_ <<= 1;
        total_ = prefix_sum(n_);
    }

    std::size_t size() const { return n_; }
    double total() const { return total_; }

    // Sum of weights over [0, count).
    double prefix_sum(std::size_t count) const {
        double s = 0.0;
        for (std::size_t i = count; i > 0; i -= i & (~i + 1)) s += tree_[i];
        return s;
    }

    void add(std::size_t index, double delta) {
        for (std::size_t i = index + 1; i <= n_; i += i & (~i + 1)) tree_[i] += delta;
        total_ += delta;
    }

    // Smallest 0-based index whose inclusive cumulative sum is strictly
    // greater than u. Zero-weight entries are never returned. Assumes
    // u < total(); returns n_ when u exhausts all mass (caller guards).
    std::size_t find(double u) const {
        std::size_t pos = 0;
        for (std::size_t pw = top_; pw > 0; pw >>= 1) {
            const std::size_t next = pos + pw;
            if (next <= n_ && tree_[next] <= u) {
                u -= tree_[next];
                pos = next;
            }
        }
        return pos;  // 0-based: pos entries have cumulative sum <= original u
    }

private:
    std::size_t n_;
    std::size_t top_ = 1;
    std::vector<double> tree_;
    double total_ = 0.0;
};

/// Samples `count` distinct indices from [0, n) uniformly (partial
/// Fisher-Yates). Result order is the draw order.
inline std::vector<int> sample_without_replacement(std::size_t n, std::size_t count,
                                                   Rng& rng) {
    if (count > n) throw ParameterError("sample_without_replacement: count exceeds population");
    std::vector<int> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = static_cast<int>(i);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + rng.uniform_index(n - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    return pool;
}

/// Draws `count` distinct indices without replacement, where each draw picks
/// index i with probability weights[i] over the remaining total (sequential
/// draws with renormalization). Zero-weight entries are never drawn while
/// positive mass remains; if the positive mass runs out early, the remaining
/// slots are filled uniformly from the leftover indices.
inline std::vector<int> weighted_sample_without_replacement(
    std::span<const double> weights, std::size_t count, Rng& rng) {
    const std::size_t n = weights.size();
    if (count > n) {
        throw ParameterError("weighted_sample_without_replacement: count exceeds population");
    }
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw ParameterError("weighted_sample_without_replacement: weights must be finite and >= 0");
        }
    }

    FenwickTree tree(weights);
    std::vector<int> picked;
    picked.reserve(count);
    std::vector<bool> taken(n, false);

    while (picked.size() < count && tree.total() > 1e-300) {
        const double u = rng.uniform01() * tree.total();
        std::size_t idx = tree.find(u);
        if (idx >= n) {  // numeric edge: u rounded up to the full mass
            idx = n;
            while (idx > 0 && (taken[idx - 1] || weights[idx - 1] <= 0.0)) --idx;
            if (idx == 0) break;
            --idx;
        }
        picked.push_back(static_cast<int>(idx));
        taken[idx] = true;
        tree.add(idx, -weights[idx]);
    }

    if (picked.size() < count) {
        std::vector<int> rest;
        for (std::size_t i = 0; i < n; ++i)
            if (!taken[i]) rest.push_back(static_cast<int>(i));
        const std::size_t need = count - picked.size();
        for (std::size_t i = 0; i < need; ++i) {
            const std::size_t j = i + rng.uniform_index(rest.size() - i);
            std::swap(rest[i], rest[j]);
            picked.push_back(rest[i]);
        }
    }
    return picked;
}

}  // namespace care
