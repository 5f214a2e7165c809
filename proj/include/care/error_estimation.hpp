#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "care/agreement.hpp"
#include "care/errors.hpp"
#include "care/matrix.hpp"

namespace care {

/// Joint error-rate estimate for b detectors recovered from their pairwise
/// agreement rates. `pairwise` holds the implied pair error rates (diagonal
/// carries the individual rates). `kkt_residual` is the solver's final
/// max(primal, dual) residual; `converged` reports whether it met tolerance
/// before the iteration cap.
struct ErrorEstimate {
    std::vector<double> individual;
    Matrix pairwise;
    double objective = 0.0;
    bool converged = false;
    int iterations = 0;
    double kkt_residual = 0.0;
};

namespace detail {

// Hinge part of the per-coordinate cost: the slack an error rate needs
// above 0.5 enters the objective linearly, so the eliminated slack equals
// max(0, t - 0.5).
inline double hinge(double t) { return std::max(0.0, t - 0.5); }

// argmin over t in [0,1] of t^2 + hinge(t) + (rho/2)(t - v)^2. The cost is
// convex piecewise-quadratic with a kink at 0.5; both branch minimizers are
// closed-form, the better one wins.
inline double prox_error_cost(double v, double rho) {
    const double lo = std::clamp(rho * v / (2.0 + rho), 0.0, 0.5);
    const double hi = std::clamp((rho * v - 1.0) / (2.0 + rho), 0.5, 1.0);
    const auto cost = [&](double t) {
        const double d = t - v;
        return t * t + hinge(t) + 0.5 * rho * d * d;
    };
    return cost(lo) <= cost(hi) ? lo : hi;
}

}  // namespace detail

/// Minimizes  sum over singles i of (e_i^2 + eps_i)  +  sum over pairs of
/// (e_ij^2 + eps_ij)  subject to  a_ij = 1 - e_i - e_j + 2 e_ij,
/// 0 <= e <= 0.5 + eps, eps >= 0, and the box e <= 1.
///
/// The pair rates and slacks are eliminated analytically
/// (e_ij = (a_ij - 1 + e_i + e_j) / 2, eps = max(0, e - 0.5)), leaving a
/// convex piecewise-quadratic program over the b individual rates with the
/// linear constraints 0 <= e_ij <= 1. Solved by ADMM: the consensus variable
/// carries every single and pair rate, its prox is the closed form above,
/// and the least-squares step inverts (beta I + gamma 11^T) via
/// Sherman-Morrison in O(b). Deterministic: fixed iteration, no randomness.
inline ErrorEstimate estimate_errors(const Matrix& rates) {
    const std::size_t b = rates.rows;
    if (b < 2 || rates.cols != b) {
        throw ParameterError("estimate_errors: need a square agreement matrix with b >= 2");
    }
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < b; ++j) {
            const double a = rates.at(i, j);
            if (!(a >= 0.0 && a <= 1.0)) {
                throw ParameterError("estimate_errors: agreement rates must lie in [0, 1]");
            }
            if (std::abs(a - rates.at(j, i)) > 1e-12) {
                throw ParameterError("estimate_errors: agreement matrix must be symmetric");
            }
        }
    }

    const std::size_t npairs = b * (b - 1) / 2;
    const std::size_t m = b + npairs;  // consensus coordinates: singles then pairs

    std::vector<std::size_t> pair_i(npairs), pair_j(npairs);
    std::vector<double> offset(npairs);  // (a_ij - 1) / 2
    {
        std::size_t p = 0;
        for (std::size_t i = 0; i < b; ++i) {
            for (std::size_t j = i + 1; j < b; ++j, ++p) {
                pair_i[p] = i;
                pair_j[p] = j;
                offset[p] = 0.5 * (rates.at(i, j) - 1.0);
            }
        }
    }

    std::vector<double> e(b, 0.25);
    std::vector<double> ax(m), z(m), z_prev(m), u(m, 0.0), v(b);

    const auto apply_map = [&](const std::vector<double>& err, std::vector<double>& out) {
        for (std::size_t i = 0; i < b; ++i) out[i] = err[i];
        for (std::size_t p = 0; p < npairs; ++p) {
            out[b + p] = 0.5 * (err[pair_i[p]] + err[pair_j[p]]) + offset[p];
        }
    };

    apply_map(e, z);
    for (double& t : z) t = std::clamp(t, 0.0, 1.0);

    const double beta = (static_cast<double>(b) + 2.0) / 4.0;
    const double gamma = 0.25;

    double rho = 2.0;
    double primal = 0.0, dual = 0.0;
    const double tol_primal = 1e-10;
    const double tol_dual = 1e-9;
    const int max_iterations = 50000;
    int iter = 0;
    bool converged = false;

    for (; iter < max_iterations; ++iter) {
        // e-step: least squares against (z - u), adjoint then O(b) solve.
        for (std::size_t i = 0; i < b; ++i) v[i] = z[i] - u[i];
        for (std::size_t p = 0; p < npairs; ++p) {
            const double w = 0.5 * (z[b + p] - u[b + p] - offset[p]);
            v[pair_i[p]] += w;
            v[pair_j[p]] += w;
        }
        double vsum = 0.0;
        for (double t : v) vsum += t;
        const double correction = gamma * vsum / (beta + gamma * static_cast<double>(b));
        for (std::size_t i = 0; i < b; ++i) e[i] = (v[i] - correction) / beta;

        apply_map(e, ax);

        // z-step: per-coordinate prox; u-step: scaled dual ascent.
        std::swap(z, z_prev);
        for (std::size_t t = 0; t < m; ++t) {
            z[t] = detail::prox_error_cost(ax[t] + u[t], rho);
            u[t] += ax[t] - z[t];
        }

        primal = 0.0;
        for (std::size_t t = 0; t < m; ++t) primal = std::max(primal, std::abs(ax[t] - z[t]));
        // Dual residual: rho * || M^T (z - z_prev) ||_inf.
        dual = 0.0;
        {
            std::vector<double>& dz = z_prev;  // reuse storage for the adjoint
            for (std::size_t t = 0; t < m; ++t) dz[t] = z[t] - dz[t];
            for (std::size_t i = 0; i < b; ++i) v[i] = dz[i];
            for (std::size_t p = 0; p < npairs; ++p) {
                const double w = 0.5 * dz[b + p];
                v[pair_i[p]] += w;
                v[pair_j[p]] += w;
            }
            for (std::size_t i = 0; i < b; ++i) dual = std::max(dual, rho * std::abs(v[i]));
        }

        if (primal <= tol_primal && dual <= tol_dual) {
            converged = true;
            ++iter;
            break;
        }

        // Residual balancing keeps the two tolerances comparable.
        if ((iter + 1) % 50 == 0) {
            if (primal > 10.0 * dual && rho < 1e6) {
                rho *= 2.0;
                for (double& t : u) t *= 0.5;
            } else if (dual > 10.0 * primal && rho > 1e-4) {
                rho *= 0.5;
                for (double& t : u) t *= 2.0;
            }
        }
    }

    ErrorEstimate result;
    result.individual.resize(b);
    for (std::size_t i = 0; i < b; ++i) result.individual[i] = z[i];  // z obeys the box exactly
    result.pairwise = Matrix(b, b, 0.0);
    for (std::size_t i = 0; i < b; ++i) result.pairwise.at(i, i) = result.individual[i];
    double objective = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        objective += result.individual[i] * result.individual[i] +
                     detail::hinge(result.individual[i]);
    }
    for (std::size_t p = 0; p < npairs; ++p) {
        const double eij = std::clamp(
            0.5 * (result.individual[pair_i[p]] + result.individual[pair_j[p]]) + offset[p], 0.0,
            1.0);
        result.pairwise.at(pair_i[p], pair_j[p]) = eij;
        result.pairwise.at(pair_j[p], pair_i[p]) = eij;
        objective += eij * eij + detail::hinge(eij);
    }
    result.objective = objective;
    result.converged = converged;
    result.iterations = iter;
    result.kkt_residual = std::max(primal, dual);
    return result;
}

inline ErrorEstimate estimate_errors(const AgreementSummary& summary) {
    return estimate_errors(summary.rates);
}

}  // namespace care
