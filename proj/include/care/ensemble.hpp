#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "care/agreement.hpp"
#include "care/dataset.hpp"
#include "care/detectors.hpp"
#include "care/error_estimation.hpp"
#include "care/errors.hpp"
#include "care/parallel.hpp"
#include "care/random.hpp"
#include "care/scaling.hpp"

namespace care {

struct EnsembleConfig {
    int k = 5;
    int b = 100;
    int max_iter = 15;  // the loop runs while iter <= max_iter
    double confidence = 0.2;
    DetectorKind detector_kind = DetectorKind::Lof;
    double prune_threshold = 0.5;
    std::uint64_t seed = 0;
    int fvps_min_abs = 50;
    int fvps_max_abs = 1000;
    int threads = 1;  // 0 = hardware concurrency
};

inline void validate(const EnsembleConfig& cfg) {
    if (cfg.k < 1) throw ParameterError("k must be positive");
    if (cfg.b < 2) throw ParameterError("need at least 2 base detectors");
    if (cfg.max_iter < 0) throw ParameterError("max_iter must be nonnegative");
    if (!(cfg.confidence > 0.0 && cfg.confidence < 1.0)) {
        throw ParameterError("confidence must lie in (0, 1)");
    }
    if (!(cfg.prune_threshold > 0.0 && cfg.prune_threshold <= 1.0)) {
        throw ParameterError("prune_threshold must lie in (0, 1]");
    }
    if (cfg.fvps_min_abs < 1 || cfg.fvps_max_abs < cfg.fvps_min_abs) {
        throw ParameterError("sample-size bounds must satisfy 1 <= min <= max");
    }
}

/// Per-detector aggregation weights with the worse-than-random detectors
/// masked out.
struct DetectorWeights {
    std::vector<double> values;
    std::vector<bool> pruned;

    std::size_t pruned_count() const {
        return static_cast<std::size_t>(std::count(pruned.begin(), pruned.end(), true));
    }
};

// Weight clamp: an estimated error of exactly 0 would give infinite weight.
constexpr double kMinErrorRate = 1e-6;

/// Maps estimated error rates to weights w = 0.5 * ln(2/e - 1) and prunes
/// detectors with e >= prune_threshold. If that would discard everything,
/// the single lowest-error detector (lowest index on ties) is retained.
inline DetectorWeights compute_weights(const ErrorEstimate& errors, double prune_threshold) {
    const std::size_t b = errors.individual.size();
    DetectorWeights w;
    w.values.resize(b);
    w.pruned.resize(b);
    for (std::size_t i = 0; i < b; ++i) {
        const double e = std::clamp(errors.individual[i], kMinErrorRate, 1.0);
        w.values[i] = 0.5 * std::log(2.0 / e - 1.0);
        w.pruned[i] = e >= prune_threshold;
    }
    if (std::all_of(w.pruned.begin(), w.pruned.end(), [](bool p) { return p; })) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < b; ++i) {
            if (errors.individual[i] < errors.individual[best]) best = i;
        }
        w.pruned[best] = false;
    }
    return w;
}

struct AggregateResult {
    ProbScores scores;
    bool unweighted_fallback = false;  // total weight was 0
};

/// Weighted mean of the unpruned probability rows; falls back to the plain
/// mean of the unpruned rows when the surviving weights sum to zero.
inline AggregateResult weighted_aggregate(const std::vector<std::vector<double>>& probs,
                                          const DetectorWeights& weights) {
    const std::size_t b = probs.size();
    if (b == 0 || weights.values.size() != b) {
        throw ParameterError("weighted_aggregate: weight count must match detector count");
    }
    const std::size_t n = probs[0].size();

    double total = 0.0;
    std::size_t active = 0;
    for (std::size_t i = 0; i < b; ++i) {
        if (!weights.pruned[i]) {
            total += weights.values[i];
            ++active;
        }
    }
    if (active == 0) throw ParameterError("weighted_aggregate: every detector is pruned");

    AggregateResult result;
    result.scores.values.assign(n, 0.0);
    const bool unweighted = !(total > 0.0);
    result.unweighted_fallback = unweighted;
    const double denom = unweighted ? static_cast<double>(active) : total;
    for (std::size_t i = 0; i < b; ++i) {
        if (weights.pruned[i]) continue;
        const double wi = unweighted ? 1.0 : weights.values[i];
        const double* src = probs[i].data();
        for (std::size_t x = 0; x < n; ++x) result.scores.values[x] += wi * src[x];
    }
    for (double& v : result.scores.values) v = std::clamp(v / denom, 0.0, 1.0);
    return result;
}

struct FvpsSample {
    std::vector<int> indices;   // ascending positions into the scored set
    int filtered_count = 0;     // T
    double fraction = 0.0;      // the accepted l
};

/// Variable probability sampling: optionally drop the Cantelli-flagged top
/// scorers (count T), draw a sample fraction l uniformly between
/// min(1 - T/n, min_abs/n) and max(1 - T/n, max_abs/n) clipped into (0, 1],
/// then draw round(l * (n - T)) survivors without replacement with weights
/// (1 - score). l is re-drawn (at most 10 times) while the sample would not
/// exceed k_floor points.
inline FvpsSample variable_prob_sample(std::span<const double> scores, bool filtered,
                                       double confidence, int min_abs, int max_abs,
                                       int k_floor, Rng& rng) {
    const std::size_t n = scores.size();
    if (n < 3) throw ParameterError("variable_prob_sample: need at least 3 points");

    std::vector<int> candidates;
    int filtered_count = 0;
    if (filtered) {
        const BinaryLabels flags = cantelli_threshold(scores, confidence);
        for (std::size_t x = 0; x < n; ++x) {
            if (flags.values[x]) {
                ++filtered_count;
            } else {
                candidates.push_back(static_cast<int>(x));
            }
        }
    } else {
        candidates.resize(n);
        std::iota(candidates.begin(), candidates.end(), 0);
    }
    if (candidates.size() < static_cast<std::size_t>(k_floor) + 1) {
        throw ParameterError("variable_prob_sample: filtering left fewer than k+1 points");
    }

    const double nd = static_cast<double>(n);
    const double keep = 1.0 - static_cast<double>(filtered_count) / nd;
    double lo = std::min(keep, static_cast<double>(min_abs) / nd);
    double hi = std::max(keep, static_cast<double>(max_abs) / nd);
    hi = std::min(hi, 1.0);
    lo = std::clamp(lo, 0.0, hi);

    double fraction = 0.0;
    std::size_t target = 0;
    bool accepted = false;
    for (int attempt = 0; attempt < 10; ++attempt) {
        fraction = rng.uniform(lo, hi);
        target = static_cast<std::size_t>(
            std::lround(fraction * static_cast<double>(candidates.size())));
        if (target >= static_cast<std::size_t>(k_floor) + 1 && target <= candidates.size()) {
            accepted = true;
            break;
        }
    }
    if (!accepted) {
        throw ParameterError("variable_prob_sample: could not reach a sample of k+1 points");
    }

    std::vector<double> weights(candidates.size());
    double total = 0.0;
    for (std::size_t p = 0; p < candidates.size(); ++p) {
        weights[p] = std::max(0.0, 1.0 - scores[candidates[p]]);
        total += weights[p];
    }
    if (total <= 0.0) weights.assign(candidates.size(), 1.0);

    FvpsSample sample;
    sample.filtered_count = filtered_count;
    sample.fraction = fraction;
    for (int p : weighted_sample_without_replacement(weights, target, rng)) {
        sample.indices.push_back(candidates[p]);
    }
    std::sort(sample.indices.begin(), sample.indices.end());
    return sample;
}

/// The resampling step between iterations: filter flagged outliers, then
/// variable probability sampling on the survivors.
inline FvpsSample fvps_sample(std::span<const double> fs, double confidence, int min_abs,
                              int max_abs, int k_floor, Rng& rng) {
    return variable_prob_sample(fs, true, confidence, min_abs, max_abs, k_floor, rng);
}

/// True when the newest diagnostic value sits more than one standard
/// deviation below the running mean (both computed over the whole history,
/// newest included; population convention).
inline bool stopping_check(std::span<const double> history) {
    if (history.empty()) throw ParameterError("stopping_check: empty history");
    if (history.size() < 2) return false;
    const auto m = detail::population_moments(history);
    return history.back() < m.mean - m.stddev;
}

/// Indices of scores sorted from most to least outlying; equal scores keep
/// ascending index order.
inline std::vector<int> rank_descending(std::span<const double> scores) {
    std::vector<int> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores[a] > scores[b]; });
    return order;
}

struct IterationDiagnostics {
    int iteration = 0;
    double ccdf_auc = std::numeric_limits<double>::quiet_NaN();
    int union_size = 0;
    int pruned_count = 0;
    int sample_size = 0;        // |S| scored against in this iteration
    int filtered_count = -1;    // T of the resampling step (-1 when skipped)
    int next_sample_size = -1;  // |S| prepared for the next iteration
    bool degenerate_union = false;
    bool unweighted_fallback = false;
    double wall_seconds = 0.0;  // informational; excluded from reproducible outputs
};

struct RunResult {
    ProbScores fs;
    std::vector<int> rank;
    std::vector<IterationDiagnostics> iterations;
    std::vector<std::vector<double>> ws_history;  // the vectors averaged into fs
    bool stopped_early = false;
};

namespace detail {

inline std::vector<double> mean_of_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t n = rows.front().size();
    std::vector<double> mean(n, 0.0);
    for (const auto& row : rows) {
        for (std::size_t x = 0; x < n; ++x) mean[x] += row[x];
    }
    const double r = static_cast<double>(rows.size());
    for (double& v : mean) v /= r;
    return mean;
}

constexpr std::uint64_t kBagStream = 0x62616773;   // feature bag draws
constexpr std::uint64_t kFvpsStream = 0x66767073;  // resampling draws

}  // namespace detail

/// Runs the full sequential ensemble: per iteration, b feature-bagged base
/// detectors score every point against the current sample S; their scaled
/// scores are combined by pruned weighted aggregation (weights from the
/// agreement-based error estimates); the combined score is averaged into the
/// running result fs; S is resampled for the next iteration. Iterations
/// continue until the agreement CCDF-AUC drops more than one standard
/// deviation below its running mean (the run then returns the previous
/// cumulative result) or until max_iter is exceeded.
///
/// Degenerate iterations (no detector flagged anything) fall back to the
/// unweighted mean of all detectors and contribute no diagnostic AUC sample.
inline RunResult run_care(const Dataset& data, const EnsembleConfig& cfg) {
    validate(cfg);
    const std::size_t n = data.size();
    const int d = static_cast<int>(data.dim());
    if (n < static_cast<std::size_t>(cfg.k) + 2) {
        throw ParameterError("run_care: need more than k+1 points");
    }
    if (d < 2) throw ParameterError("run_care: need at least 2 features for feature bagging");

    std::vector<int> sample(n);
    std::iota(sample.begin(), sample.end(), 0);

    RunResult result;
    std::vector<std::vector<double>>& combined = result.ws_history;
    std::vector<double> auc_history;
    std::vector<double> fs;

    for (int iter = 0; iter <= cfg.max_iter; ++iter) {
        const auto started = std::chrono::steady_clock::now();
        const auto bags = make_feature_bags(
            d, cfg.b, derive_stream(cfg.seed, detail::kBagStream, static_cast<std::uint64_t>(iter)));

        std::vector<std::vector<double>> probs(cfg.b);
        std::vector<std::vector<std::uint8_t>> binary(cfg.b);
        parallel_for(static_cast<std::size_t>(cfg.b), cfg.threads,
                     [&](std::size_t begin, std::size_t end) {
                         for (std::size_t i = begin; i < end; ++i) {
                             const RawScores raw = score_detector(
                                 cfg.detector_kind, data.points, sample, cfg.k, bags[i], 1);
                             probs[i] = gaussian_scale(raw.values).values;
                             binary[i] = cantelli_threshold(raw.values, cfg.confidence).values;
                         }
                     });

        IterationDiagnostics diag;
        diag.iteration = iter;
        diag.sample_size = static_cast<int>(sample.size());

        std::vector<double> ws;
        bool appended_auc = false;
        try {
            const AgreementSummary summary = pairwise_agreement(binary);
            const ErrorEstimate estimate = estimate_errors(summary);
            const DetectorWeights weights = compute_weights(estimate, cfg.prune_threshold);
            AggregateResult agg = weighted_aggregate(probs, weights);
            ws = std::move(agg.scores.values);
            diag.ccdf_auc = summary.ccdf_auc;
            diag.union_size = static_cast<int>(summary.union_indices.size());
            diag.pruned_count = static_cast<int>(weights.pruned_count());
            diag.unweighted_fallback = agg.unweighted_fallback;
            auc_history.push_back(summary.ccdf_auc);
            appended_auc = true;
        } catch (const EmptyUnionError&) {
            ws = detail::mean_of_rows(probs);
            diag.degenerate_union = true;
        }

        combined.push_back(std::move(ws));
        fs = detail::mean_of_rows(combined);

        const bool stop = appended_auc && combined.size() >= 2 && stopping_check(auc_history);
        if (stop) {
            // The triggering iteration is excluded from the returned result.
            combined.pop_back();
            fs = detail::mean_of_rows(combined);
            diag.wall_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                    .count();
            result.iterations.push_back(diag);
            result.stopped_early = true;
            break;
        }

        if (iter < cfg.max_iter) {
            Rng fvps_rng(derive_stream(cfg.seed, detail::kFvpsStream,
                                       static_cast<std::uint64_t>(iter)));
            FvpsSample next = fvps_sample(fs, cfg.confidence, cfg.fvps_min_abs,
                                          cfg.fvps_max_abs, cfg.k, fvps_rng);
            diag.filtered_count = next.filtered_count;
            diag.next_sample_size = static_cast<int>(next.indices.size());
            sample = std::move(next.indices);
        }

        diag.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        result.iterations.push_back(diag);
    }

    result.fs.values = std::move(fs);
    result.rank = rank_descending(result.fs.values);
    return result;
}

enum class AggregationMode { Average, Maximum, Weighted };

/// One-shot feature bagging over the full dataset (no resampling, no
/// iteration): b bagged detectors combined by plain average, elementwise
/// maximum, or the same pruned weighted aggregation the sequential ensemble
/// uses.
inline RunResult run_feature_bagging(const Dataset& data, const EnsembleConfig& cfg,
                                     AggregationMode mode) {
    validate(cfg);
    const std::size_t n = data.size();
    const int d = static_cast<int>(data.dim());
    if (n < static_cast<std::size_t>(cfg.k) + 2) {
        throw ParameterError("run_feature_bagging: need more than k+1 points");
    }
    if (d < 2) throw ParameterError("run_feature_bagging: need at least 2 features");

    std::vector<int> sample(n);
    std::iota(sample.begin(), sample.end(), 0);
    const auto bags = make_feature_bags(d, cfg.b, derive_stream(cfg.seed, detail::kBagStream, 0));

    std::vector<std::vector<double>> probs(cfg.b);
    std::vector<std::vector<std::uint8_t>> binary(cfg.b);
    parallel_for(static_cast<std::size_t>(cfg.b), cfg.threads,
                 [&](std::size_t begin, std::size_t end) {
                     for (std::size_t i = begin; i < end; ++i) {
                         const RawScores raw = score_detector(cfg.detector_kind, data.points,
                                                              sample, cfg.k, bags[i], 1);
                         probs[i] = gaussian_scale(raw.values).values;
                         if (mode == AggregationMode::Weighted) {
                             binary[i] = cantelli_threshold(raw.values, cfg.confidence).values;
                         }
                     }
                 });

    IterationDiagnostics diag;
    diag.sample_size = static_cast<int>(n);
    RunResult result;
    std::vector<double> ws;

    switch (mode) {
        case AggregationMode::Average:
            ws = detail::mean_of_rows(probs);
            break;
        case AggregationMode::Maximum: {
            ws.assign(n, 0.0);
            for (const auto& row : probs) {
                for (std::size_t x = 0; x < n; ++x) ws[x] = std::max(ws[x], row[x]);
            }
            break;
        }
        case AggregationMode::Weighted: {
            try {
                const AgreementSummary summary = pairwise_agreement(binary);
                const ErrorEstimate estimate = estimate_errors(summary);
                const DetectorWeights weights = compute_weights(estimate, cfg.prune_threshold);
                AggregateResult agg = weighted_aggregate(probs, weights);
                ws = std::move(agg.scores.values);
                diag.ccdf_auc = summary.ccdf_auc;
                diag.union_size = static_cast<int>(summary.union_indices.size());
                diag.pruned_count = static_cast<int>(weights.pruned_count());
                diag.unweighted_fallback = agg.unweighted_fallback;
            } catch (const EmptyUnionError&) {
                ws = detail::mean_of_rows(probs);
                diag.degenerate_union = true;
            }
            break;
        }
    }

    result.ws_history.push_back(ws);
    result.fs.values = std::move(ws);
    result.rank = rank_descending(result.fs.values);
    result.iterations.push_back(diag);
    return result;
}

/// Single detector on the full feature set, scores scaled to [0, 1].
inline RunResult run_plain(const Dataset& data, const EnsembleConfig& cfg) {
    const std::size_t n = data.size();
    if (n < static_cast<std::size_t>(cfg.k) + 2) {
        throw ParameterError("run_plain: need more than k+1 points");
    }
    std::vector<int> sample(n);
    std::iota(sample.begin(), sample.end(), 0);

    const RawScores raw =
        score_detector(cfg.detector_kind, data.points, sample, cfg.k,
                       FeatureBag::all(static_cast<int>(data.dim())), cfg.threads);

    RunResult result;
    result.fs = gaussian_scale(raw.values);
    result.ws_history.push_back(result.fs.values);
    result.rank = rank_descending(result.fs.values);
    result.iterations.emplace_back();
    result.iterations.back().sample_size = static_cast<int>(n);
    return result;
}

}  // namespace care
