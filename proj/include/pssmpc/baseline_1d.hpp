#pragma once

// One-dimensional comparison: x+ = x + 2 + u + sigma d, safe set h(x) >= 0
// with h(x) = 10 - x^2. Both controllers minimize u^2 and have closed forms
// because every constraint is an interval in u.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

#include "pssmpc/errors.hpp"

namespace pssmpc::one_dim {

struct OneDimConfig {
    double sigma{0.9};
    double x0{3.1};
    double M_cbf{10.0};  // sup of h
    double nu{0.0};      // safe set is h >= -nu
    double gamma_1d{0.81};
    double epsilon{0.1};
    double beta{1e-4};
    int m{88};

    void validate() const {
        if (!(sigma >= 0.0 && sigma < 1.0)) throw DomainError("OneDimConfig: sigma must lie in [0, 1)");
        if (!(gamma_1d > 0.0 && gamma_1d < 1.0)) throw DomainError("OneDimConfig: gamma_1d must lie in (0, 1)");
        if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("OneDimConfig: epsilon must lie in (0, 1)");
        if (!(beta > 0.0 && beta < 1.0)) throw DomainError("OneDimConfig: beta must lie in (0, 1)");
        if (!(M_cbf > 0.0)) throw DomainError("OneDimConfig: M_cbf must be positive");
        if (m < 1) throw DomainError("OneDimConfig: m must be >= 1");
    }
};

[[nodiscard]] constexpr double h_1d(double x) { return 10.0 - x * x; }

/// Closed interval of inputs; empty when lo > hi.
struct Interval {
    double lo;
    double hi;

    [[nodiscard]] bool empty() const { return lo > hi; }
    [[nodiscard]] double min_magnitude() const { return std::clamp(0.0, lo, hi); }
};

/// Tightened expectation-based barrier controller:
/// argmin u^2 s.t. h(x + 2 + u) - sigma^2 >= (1 - sigma^2) h(x).
[[nodiscard]] inline double cosner_controller(double x, double sigma) {
    const double c = x + 2.0;
    const double s2 = sigma * sigma;
    const double r2 = 10.0 - s2 - (1.0 - s2) * h_1d(x);
    if (r2 < 0.0) throw Infeasible1D("cosner_controller: tightened constraint set is empty");
    const double r = std::sqrt(r2);
    return Interval{-c - r, -c + r}.min_magnitude();
}

/// Exit-probability bound 1 - (h(x0) / M) (1 - sigma^2) of the tightened controller.
[[nodiscard]] inline double cosner_bound(double h_x0, double M_cbf, double sigma) {
    if (!(M_cbf > 0.0) || !(h_x0 >= 0.0 && h_x0 <= M_cbf))
        throw DomainError("cosner_bound: requires 0 <= h(x0) <= M_cbf");
    if (!(sigma >= 0.0 && sigma <= 1.0)) throw DomainError("cosner_bound: sigma must lie in [0, 1]");
    return 1.0 - (h_x0 / M_cbf) * (1.0 - sigma * sigma);
}

/// Feasible inputs of the sampled constraints
/// h(x + 2 + u + sigma d_i) >= (1 - gamma) h(x) for all i.
[[nodiscard]] inline Interval scenario_1d_interval(double x, std::span<const double> d_samples, double sigma,
                                                   double gamma_1d) {
    if (d_samples.empty()) throw DomainError("scenario_1d_controller: at least one sample is required");
    const double c = x + 2.0;
    const double r2 = 10.0 - (1.0 - gamma_1d) * h_1d(x);
    if (r2 < 0.0) return {1.0, -1.0};
    const double r = std::sqrt(r2);
    Interval acc{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    for (double d : d_samples) {
        const double centre = -c - sigma * d;
        acc.lo = std::max(acc.lo, centre - r);
        acc.hi = std::min(acc.hi, centre + r);
    }
    return acc;
}

[[nodiscard]] inline double scenario_1d_controller(double x, std::span<const double> d_samples, double sigma,
                                                   double gamma_1d) {
    const Interval feasible = scenario_1d_interval(x, d_samples, sigma, gamma_1d);
    if (feasible.empty()) throw Infeasible1D("scenario_1d_controller: sampled constraints have no common input");
    return feasible.min_magnitude();
}

[[nodiscard]] constexpr double step_1d(double x, double u, double sigma, double d) { return x + 2.0 + u + sigma * d; }

}  // namespace pssmpc::one_dim
