#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "care/dataset.hpp"
#include "care/detectors.hpp"
#include "care/ensemble.hpp"
#include "care/errors.hpp"
#include "care/scaling.hpp"
#include "care/synthetic.hpp"

namespace care {

/// Precision/recall walked down the ranked list (one point per rank,
/// descending score, ties by lower index) plus the average precision:
/// the mean of the precision values at the positive ranks.
struct PRCurve {
    std::vector<double> thresholds;
    std::vector<double> precision;
    std::vector<double> recall;
    double ap = 0.0;
};

inline void check_binary_labels(std::span<const int> labels) {
    std::size_t positives = 0;
    for (int y : labels) {
        if (y != 0 && y != 1) throw ParameterError("labels must be 0 or 1");
        positives += static_cast<std::size_t>(y);
    }
    if (positives == 0 || positives == labels.size()) {
        throw ParameterError("labels must contain at least one positive and one negative");
    }
}

inline double average_precision(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        throw ParameterError("average_precision: scores and labels must align");
    }
    check_binary_labels(labels);

    const std::vector<int> order = rank_descending(scores);
    double positives_seen = 0.0;
    double sum = 0.0;
    for (std::size_t r = 0; r < order.size(); ++r) {
        if (labels[order[r]] == 1) {
            positives_seen += 1.0;
            sum += positives_seen / static_cast<double>(r + 1);
        }
    }
    return sum / positives_seen;
}

inline PRCurve pr_curve(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        throw ParameterError("pr_curve: scores and labels must align");
    }
    check_binary_labels(labels);

    const std::vector<int> order = rank_descending(scores);
    double total_positives = 0.0;
    for (int y : labels) total_positives += y;

    PRCurve curve;
    curve.thresholds.reserve(order.size());
    curve.precision.reserve(order.size());
    curve.recall.reserve(order.size());
    double positives_seen = 0.0;
    double ap = 0.0;
    for (std::size_t r = 0; r < order.size(); ++r) {
        if (labels[order[r]] == 1) {
            positives_seen += 1.0;
            ap += positives_seen / static_cast<double>(r + 1);
        }
        curve.thresholds.push_back(scores[order[r]]);
        curve.precision.push_back(positives_seen / static_cast<double>(r + 1));
        curve.recall.push_back(positives_seen / total_positives);
    }
    curve.ap = ap / total_positives;
    return curve;
}

/// One-sided sign test: probability of at least `wins` successes among
/// wins + losses fair coin flips (ties are dropped by the caller).
inline double sign_test_p_greater(int wins, int losses) {
    if (wins < 0 || losses < 0) throw ParameterError("sign_test_p_greater: negative counts");
    const int m = wins + losses;
    if (m == 0) return 1.0;
    const double log_half = std::log(0.5);
    double p = 0.0;
    for (int x = wins; x <= m; ++x) {
        const double log_choose =
            std::lgamma(m + 1.0) - std::lgamma(x + 1.0) - std::lgamma(m - x + 1.0);
        p += std::exp(log_choose + m * log_half);
    }
    return std::min(p, 1.0);
}

// ---------------------------------------------------------------------------
// Bias-variance study
// ---------------------------------------------------------------------------

enum class BVProcedure {
    NoSampling,
    Bootstrapping,
    SingleProbSampling,
    MultiProbSampling,
    FilteredMultiProbSampling,
};

inline const char* to_string(BVProcedure p) {
    switch (p) {
        case BVProcedure::NoSampling: return "no_sampling";
        case BVProcedure::Bootstrapping: return "bootstrapping";
        case BVProcedure::SingleProbSampling: return "single_prob_sampling";
        case BVProcedure::MultiProbSampling: return "multi_prob_sampling";
        case BVProcedure::FilteredMultiProbSampling: return "filtered_multi_prob_sampling";
    }
    return "unknown";
}

/// Bias and variance per neighborhood size, averaged over the test sets.
/// Bias is the root mean square gap between the labels and the mean score
/// across training replicates; variance is the mean squared dispersion of
/// the replicate scores around that mean.
struct BVResult {
    BVProcedure procedure = BVProcedure::NoSampling;
    std::vector<int> k_values;
    std::vector<double> bias;
    std::vector<double> variance;
};

namespace detail {

constexpr std::uint64_t kBvStream = 0x62767270;  // replicate sampling draws

// Builds the training replicate for one (procedure, k, train set) cell:
// the row indices of `train` that act as the scoring reference.
inline std::vector<int> build_replicate(const Dataset& train, BVProcedure procedure,
                                        DetectorKind kind, int k, int rounds, int min_abs,
                                        int max_abs, double confidence, Rng& rng) {
    const std::size_t m = train.size();
    std::vector<int> all(m);
    std::iota(all.begin(), all.end(), 0);

    switch (procedure) {
        case BVProcedure::NoSampling:
            return all;
        case BVProcedure::Bootstrapping: {
            std::vector<int> picked(m);
            for (std::size_t i = 0; i < m; ++i) {
                picked[i] = static_cast<int>(rng.uniform_index(m));
            }
            std::sort(picked.begin(), picked.end());
            return picked;
        }
        case BVProcedure::SingleProbSampling: {
            const RawScores raw =
                score_detector(kind, train.points, all, k, FeatureBag::all(static_cast<int>(train.dim())));
            const ProbScores f = gaussian_scale(raw.values);
            return variable_prob_sample(f.values, false, confidence, min_abs, max_abs, k, rng)
                .indices;
        }
        case BVProcedure::MultiProbSampling:
        case BVProcedure::FilteredMultiProbSampling: {
            const bool filtered = procedure == BVProcedure::FilteredMultiProbSampling;
            std::vector<int> current = all;
            const FeatureBag bag = FeatureBag::all(static_cast<int>(train.dim()));
            for (int round = 0; round < rounds; ++round) {
                const RawScores raw = score_detector(kind, train.points, current, k, bag);
                const ProbScores f = gaussian_scale(raw.values);
                current = variable_prob_sample(f.values, filtered, confidence, min_abs,
                                               max_abs, k, rng)
                              .indices;
            }
            return current;
        }
    }
    throw ParameterError("build_replicate: unknown procedure");
}

}  // namespace detail

/// Runs one procedure of the synthetic bias-variance study: R training sets
/// and the test sets come from one mixture model; each training set is
/// reduced to a replicate sample by the procedure; every test point's score
/// is the scaled detector output against that replicate.
inline BVResult bias_variance_experiment(const SyntheticBVSpec& spec, BVProcedure procedure,
                                         DetectorKind kind, std::vector<int> k_values,
                                         int sampling_rounds = 10, int threads = 1,
                                         int min_abs = 50, int max_abs = 1000,
                                         double confidence = 0.2) {
    if (k_values.empty()) throw ParameterError("bias_variance_experiment: k_values empty");
    for (int k : k_values) {
        if (k < 1) throw ParameterError("bias_variance_experiment: k must be positive");
    }
    if (sampling_rounds < 1) {
        throw ParameterError("bias_variance_experiment: sampling_rounds must be positive");
    }

    const auto [train_sets, test_sets] = generate_bv_synthetic(spec);
    const std::size_t num_train = train_sets.size();
    const std::size_t num_test = test_sets.size();

    BVResult result;
    result.procedure = procedure;
    result.k_values = k_values;
    result.bias.resize(k_values.size());
    result.variance.resize(k_values.size());

    for (std::size_t kk = 0; kk < k_values.size(); ++kk) {
        const int k = k_values[kk];

        // Replicate samples, one per training set.
        std::vector<std::vector<int>> replicates(num_train);
        parallel_for(num_train, threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                Rng rng(derive_stream(spec.seed, detail::kBvStream,
                                      static_cast<std::uint64_t>(procedure) * 1000 +
                                          static_cast<std::uint64_t>(k),
                                      static_cast<std::uint64_t>(i)));
                replicates[i] = detail::build_replicate(train_sets[i], procedure, kind, k,
                                                        sampling_rounds, min_abs, max_abs,
                                                        confidence, rng);
            }
        });

        double bias_total = 0.0;
        double variance_total = 0.0;
        for (std::size_t j = 0; j < num_test; ++j) {
            const Dataset& test = test_sets[j];
            const std::size_t n = test.size();

            // scores[i][x]: replicate i's scaled score of test point x
            std::vector<std::vector<double>> scores(num_train);
            parallel_for(num_train, threads, [&](std::size_t begin, std::size_t end) {
                for (std::size_t i = begin; i < end; ++i) {
                    const Matrix reference =
                        select_rows(train_sets[i].points, replicates[i]);
                    const RawScores raw =
                        kind == DetectorKind::AvgKnn
                            ? avgknn_score(test.points, reference, k)
                            : lof_score(test.points, reference, k);
                    scores[i] = gaussian_scale(raw.values).values;
                }
            });

            const std::vector<int>& labels = *test.labels;
            double sq_bias_sum = 0.0;
            double dispersion_sum = 0.0;
            for (std::size_t x = 0; x < n; ++x) {
                double mean = 0.0;
                for (std::size_t i = 0; i < num_train; ++i) mean += scores[i][x];
                mean /= static_cast<double>(num_train);
                const double gap = static_cast<double>(labels[x]) - mean;
                sq_bias_sum += gap * gap;
                for (std::size_t i = 0; i < num_train; ++i) {
                    const double d = scores[i][x] - mean;
                    dispersion_sum += d * d;
                }
            }
            bias_total += std::sqrt(sq_bias_sum / static_cast<double>(n));
            variance_total +=
                dispersion_sum / (static_cast<double>(n) * static_cast<double>(num_train));
        }
        result.bias[kk] = bias_total / static_cast<double>(num_test);
        result.variance[kk] = variance_total / static_cast<double>(num_test);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Synthetic detector studies
// ---------------------------------------------------------------------------

/// Gap between true and estimated detector error rates across snapshots.
struct ErrorGapStudy {
    std::vector<double> mean_abs_gap;  // per detector, mean over snapshots
    std::vector<double> max_abs_gap;   // per detector, max over snapshots
    double overall_mean = 0.0;
    double overall_max = 0.0;
};

inline ErrorGapStudy error_gap_study(const SyntheticDetectorSpec& spec) {
    const auto snapshots = generate_detector_outputs(spec);
    const std::size_t b = spec.true_errors.size();

    ErrorGapStudy study;
    study.mean_abs_gap.assign(b, 0.0);
    study.max_abs_gap.assign(b, 0.0);

    for (const auto& snap : snapshots) {
        const AgreementSummary summary = pairwise_agreement(snap.outputs);
        const ErrorEstimate estimate = estimate_errors(summary);
        for (std::size_t i = 0; i < b; ++i) {
            const double gap = std::abs(estimate.individual[i] - spec.true_errors[i]);
            study.mean_abs_gap[i] += gap;
            study.max_abs_gap[i] = std::max(study.max_abs_gap[i], gap);
        }
    }
    for (std::size_t i = 0; i < b; ++i) {
        study.mean_abs_gap[i] /= static_cast<double>(snapshots.size());
        study.overall_mean += study.mean_abs_gap[i];
        study.overall_max = std::max(study.overall_max, study.max_abs_gap[i]);
    }
    study.overall_mean /= static_cast<double>(b);
    return study;
}

/// Ensemble accuracies of three consensus rules on one synthetic snapshot
/// collection: plain vote average, error-weighted average, and error-weighted
/// average with worse-than-random detectors pruned. A point is predicted
/// positive when its (weighted) vote reaches 0.5; accuracy is measured
/// against the snapshot's truth.
struct AccuracyRecord {
    double average = 0.0;
    double weighted = 0.0;
    double pruned_weighted = 0.0;
};

inline std::vector<AccuracyRecord> aggregation_study(const SyntheticDetectorSpec& spec,
                                                     double prune_threshold = 0.5) {
    const auto snapshots = generate_detector_outputs(spec);
    const std::size_t b = spec.true_errors.size();

    std::vector<AccuracyRecord> records;
    records.reserve(snapshots.size());

    for (const auto& snap : snapshots) {
        const std::size_t n = snap.truth.size();
        const AgreementSummary summary = pairwise_agreement(snap.outputs);
        const ErrorEstimate estimate = estimate_errors(summary);
        const DetectorWeights pruned = compute_weights(estimate, prune_threshold);
        DetectorWeights unpruned = pruned;
        std::fill(unpruned.pruned.begin(), unpruned.pruned.end(), false);

        const auto accuracy = [&](const DetectorWeights& w, bool uniform) {
            double total = 0.0;
            for (std::size_t i = 0; i < b; ++i) {
                if (!w.pruned[i]) total += uniform ? 1.0 : w.values[i];
            }
            std::size_t correct = 0;
            for (std::size_t x = 0; x < n; ++x) {
                double vote = 0.0;
                for (std::size_t i = 0; i < b; ++i) {
                    if (!w.pruned[i]) vote += (uniform ? 1.0 : w.values[i]) * snap.outputs[i][x];
                }
                const int predicted = total > 0.0 && vote >= 0.5 * total ? 1 : 0;
                correct += predicted == snap.truth[x];
            }
            return static_cast<double>(correct) / static_cast<double>(n);
        };

        AccuracyRecord rec;
        rec.average = accuracy(unpruned, true);
        rec.weighted = accuracy(unpruned, false);
        rec.pruned_weighted = accuracy(pruned, false);
        records.push_back(rec);
    }
    return records;
}

}  // namespace care
