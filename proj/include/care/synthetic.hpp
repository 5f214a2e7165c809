#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "care/dataset.hpp"
#include "care/errors.hpp"
#include "care/matrix.hpp"
#include "care/random.hpp"

namespace care {

enum class OutlierModel { PowerLaw, Uniform };

struct GaussianComponent {
    std::vector<double> mean;
    Matrix covariance;  // d x d
    double weight = 1.0;
};

/// Generator settings for the labeled train/test collections used by the
/// bias-variance studies. When `inlier_components` is empty a default model
/// is derived from the seed: three equally weighted spherical unit-variance
/// Gaussians with means uniform in [-5, 5]^dim. Power-law outliers add a
/// sign-randomized per-coordinate Pareto offset (given shape) to a randomly
/// chosen component mean; uniform outliers cover the bounding box of the
/// component means inflated 2x about its center.
struct SyntheticBVSpec {
    int dim = 20;
    std::vector<GaussianComponent> inlier_components;
    OutlierModel outlier_model = OutlierModel::Uniform;
    double power_law_shape = 1.5;
    int train_size = 210;
    int train_outliers = 10;
    int test_size = 1000;
    int num_train_sets = 5;
    int num_test_sets = 10;
    std::uint64_t seed = 0;
};

struct SyntheticDetectorSpec {
    int n = 1000;
    double outlier_fraction = 0.1;
    std::vector<double> true_errors;
    int trials = 100;
    std::uint64_t seed = 0;
};

// One synthetic scene: ground truth plus each detector's binary output,
// where detector i flips every truth entry independently with probability
// true_errors[i].
struct DetectorSnapshot {
    std::vector<std::uint8_t> truth;
    std::vector<std::vector<std::uint8_t>> outputs;  // |e| x n
};

namespace detail {

// Cholesky factor allowing positive-semidefinite input (zero pivots give
// zero columns). Indefinite input throws.
inline Matrix cholesky(const Matrix& a) {
    const std::size_t d = a.rows;
    if (a.cols != d) throw ValidationError("covariance matrix must be square");
    double scale = 0.0;
    for (std::size_t j = 0; j < d; ++j) scale = std::max(scale, std::abs(a.at(j, j)));
    const double tol = 1e-10 * std::max(scale, 1.0);

    Matrix l(d, d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        double pivot = a.at(j, j);
        for (std::size_t k = 0; k < j; ++k) pivot -= l.at(j, k) * l.at(j, k);
        if (pivot < -tol) throw ValidationError("covariance matrix is not positive semidefinite");
        const double ljj = std::sqrt(std::max(pivot, 0.0));
        l.at(j, j) = ljj;
        for (std::size_t i = j + 1; i < d; ++i) {
            double v = a.at(i, j);
            for (std::size_t k = 0; k < j; ++k) v -= l.at(i, k) * l.at(j, k);
            if (ljj > 0.0) {
                l.at(i, j) = v / ljj;
            } else if (std::abs(v) > tol) {
                throw ValidationError("covariance matrix is not positive semidefinite");
            }
        }
    }
    return l;
}

struct MixtureModel {
    std::vector<std::vector<double>> means;
    std::vector<Matrix> chol;            // Cholesky factor per component
    std::vector<double> cumulative_weight;
    std::vector<double> box_lo, box_hi;  // uniform outlier support
    OutlierModel outlier_model;
    double power_law_shape;
    int dim;
};

inline MixtureModel build_mixture_model(const SyntheticBVSpec& spec) {
    MixtureModel model;
    model.dim = spec.dim;
    model.outlier_model = spec.outlier_model;
    model.power_law_shape = spec.power_law_shape;

    std::vector<GaussianComponent> components = spec.inlier_components;
    if (components.empty()) {
        Rng rng(derive_stream(spec.seed, 0x6d6f64656cULL));  // model stream
        Matrix identity(spec.dim, spec.dim, 0.0);
        for (int j = 0; j < spec.dim; ++j) identity.at(j, j) = 1.0;
        for (int c = 0; c < 3; ++c) {
            GaussianComponent comp;
            comp.mean.resize(spec.dim);
            for (int j = 0; j < spec.dim; ++j) comp.mean[j] = rng.uniform(-5.0, 5.0);
            comp.covariance = identity;
            comp.weight = 1.0 / 3.0;
            components.push_back(std::move(comp));
        }
    }

    double total_weight = 0.0;
    for (const auto& comp : components) {
        if (static_cast<int>(comp.mean.size()) != spec.dim) {
            throw ValidationError("component mean dimension does not match spec.dim");
        }
        if (comp.covariance.rows != static_cast<std::size_t>(spec.dim) ||
            comp.covariance.cols != static_cast<std::size_t>(spec.dim)) {
            throw ValidationError("component covariance shape does not match spec.dim");
        }
        if (!(comp.weight > 0.0)) throw ValidationError("mixture weights must be positive");
        total_weight += comp.weight;
    }
    if (std::abs(total_weight - 1.0) > 1e-12) {
        throw ValidationError("mixture weights must sum to 1");
    }

    double cum = 0.0;
    for (const auto& comp : components) {
        model.means.push_back(comp.mean);
        model.chol.push_back(cholesky(comp.covariance));
        cum += comp.weight;
        model.cumulative_weight.push_back(cum);
    }
    model.cumulative_weight.back() = 1.0;

    model.box_lo.resize(spec.dim);
    model.box_hi.resize(spec.dim);
    for (int j = 0; j < spec.dim; ++j) {
        double lo = model.means[0][j], hi = model.means[0][j];
        for (const auto& mean : model.means) {
            lo = std::min(lo, mean[j]);
            hi = std::max(hi, mean[j]);
        }
        const double center = 0.5 * (lo + hi);
        const double half = std::max(0.5 * (hi - lo), 3.0);
        model.box_lo[j] = center - 2.0 * half;
        model.box_hi[j] = center + 2.0 * half;
    }
    return model;
}

inline std::size_t pick_component(const MixtureModel& model, Rng& rng) {
    const double u = rng.uniform01();
    for (std::size_t c = 0; c < model.cumulative_weight.size(); ++c) {
        if (u < model.cumulative_weight[c]) return c;
    }
    return model.cumulative_weight.size() - 1;
}

inline void sample_inlier(const MixtureModel& model, Rng& rng, double* out) {
    const std::size_t c = pick_component(model, rng);
    const int d = model.dim;
    std::vector<double> z(d);
    for (int j = 0; j < d; ++j) z[j] = rng.normal();
    const Matrix& l = model.chol[c];
    for (int i = 0; i < d; ++i) {
        double v = model.means[c][i];
        for (int k = 0; k <= i; ++k) v += l.at(i, k) * z[k];
        out[i] = v;
    }
}

inline void sample_outlier(const MixtureModel& model, Rng& rng, double* out) {
    const int d = model.dim;
    if (model.outlier_model == OutlierModel::Uniform) {
        for (int j = 0; j < d; ++j) out[j] = rng.uniform(model.box_lo[j], model.box_hi[j]);
        return;
    }
    const std::size_t c = pick_component(model, rng);
    for (int j = 0; j < d; ++j) {
        const double offset = rng.pareto(model.power_law_shape);
        const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
        out[j] = model.means[c][j] + sign * offset;
    }
}

inline Dataset sample_labeled_set(const MixtureModel& model, int total, int outliers, Rng& rng) {
    Dataset ds;
    ds.points = Matrix(total, model.dim);
    std::vector<int> labels(total, 0);
    const int inliers = total - outliers;
    for (int i = 0; i < inliers; ++i) sample_inlier(model, rng, ds.points.row(i));
    for (int i = inliers; i < total; ++i) {
        sample_outlier(model, rng, ds.points.row(i));
        labels[i] = 1;
    }
    ds.labels = std::move(labels);
    return ds;
}

}  // namespace detail

inline void validate(const SyntheticBVSpec& spec) {
    if (spec.dim < 1) throw ValidationError("dim must be positive");
    if (spec.train_size <= 0 || spec.test_size <= 0 || spec.num_train_sets <= 0 ||
        spec.num_test_sets <= 0) {
        throw ValidationError("all sizes must be positive");
    }
    if (spec.train_outliers < 0 || spec.train_outliers >= spec.train_size) {
        throw ValidationError("train_outliers must be in [0, train_size)");
    }
    if (!(spec.power_law_shape > 0.0)) throw ValidationError("power_law_shape must be positive");
}

/// Draws `num_train_sets` labeled training sets of size `train_size` and
/// `num_test_sets` labeled test sets of size `test_size` from one mixture
/// model. Test sets keep the training outlier proportion. Deterministic for
/// a given spec (the seed covers the model and every set).
inline std::pair<std::vector<Dataset>, std::vector<Dataset>> generate_bv_synthetic(
    const SyntheticBVSpec& spec) {
    validate(spec);
    const detail::MixtureModel model = detail::build_mixture_model(spec);

    const int test_outliers = static_cast<int>(std::lround(
        static_cast<double>(spec.test_size) * spec.train_outliers / spec.train_size));

    std::vector<Dataset> train_sets, test_sets;
    for (int i = 0; i < spec.num_train_sets; ++i) {
        Rng rng(derive_stream(spec.seed, 0x747261696eULL, static_cast<std::uint64_t>(i)));
        train_sets.push_back(
            detail::sample_labeled_set(model, spec.train_size, spec.train_outliers, rng));
    }
    for (int j = 0; j < spec.num_test_sets; ++j) {
        Rng rng(derive_stream(spec.seed, 0x74657374ULL, static_cast<std::uint64_t>(j)));
        test_sets.push_back(detail::sample_labeled_set(model, spec.test_size, test_outliers, rng));
    }
    return {std::move(train_sets), std::move(test_sets)};
}

inline void validate(const SyntheticDetectorSpec& spec) {
    if (spec.n < 2) throw ValidationError("n must be at least 2");
    if (!(spec.outlier_fraction > 0.0 && spec.outlier_fraction < 1.0)) {
        throw ValidationError("outlier_fraction must lie in (0, 1)");
    }
    if (spec.true_errors.size() < 2) throw ValidationError("at least 2 detectors required");
    for (double e : spec.true_errors) {
        if (!(e >= 0.0 && e <= 1.0)) throw ValidationError("true errors must lie in [0, 1]");
    }
    if (spec.trials < 1) throw ValidationError("trials must be positive");
}

/// Generates `trials` independent snapshots. Each snapshot draws a truth
/// vector with round(n * outlier_fraction) outliers at uniformly random
/// positions, then detector i's output flips each truth entry independently
/// with probability true_errors[i].
inline std::vector<DetectorSnapshot> generate_detector_outputs(const SyntheticDetectorSpec& spec) {
    validate(spec);
    const int n = spec.n;
    const int num_outliers =
        static_cast<int>(std::lround(spec.outlier_fraction * static_cast<double>(n)));
    const std::size_t b = spec.true_errors.size();

    std::vector<DetectorSnapshot> snapshots(spec.trials);
    for (int t = 0; t < spec.trials; ++t) {
        Rng rng(derive_stream(spec.seed, 0x736e6170ULL, static_cast<std::uint64_t>(t)));
        DetectorSnapshot& snap = snapshots[t];
        snap.truth.assign(n, 0);
        for (int idx : sample_without_replacement(n, num_outliers, rng)) snap.truth[idx] = 1;
        snap.outputs.assign(b, std::vector<std::uint8_t>(n));
        for (std::size_t i = 0; i < b; ++i) {
            const double e = spec.true_errors[i];
            for (int x = 0; x < n; ++x) {
                const bool flip = rng.bernoulli(e);
                snap.outputs[i][x] = flip ? (1 - snap.truth[x]) : snap.truth[x];
            }
        }
    }
    return snapshots;
}

}  // namespace care
