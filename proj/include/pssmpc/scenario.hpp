#pragma once

// Seeded disturbance sampling and scenario sample-size calculators.
//
// Random streams
// --------------
// Every stream is a std::mt19937_64 engine (bit-identical on all conforming
// standard libraries). Uniform variates use the top 53 bits of one engine
// output. Standard normal variates come from the Marsaglia polar method,
// which consumes pairs of uniforms on (-1, 1), rejects points outside the
// unit disc and returns both coordinates of the accepted pair. The library
// does not use std::normal_distribution because its algorithm is
// implementation-defined.
//
// Seeds for independent streams are derived from a master seed with the
// splitmix64 finalizer: derive_seed(seed, a, b) hashes the triple, so each
// (run, purpose, step) combination gets its own engine.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "pssmpc/linalg.hpp"

namespace pssmpc {

[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed for the stream identified by (stream, index) under `seed`.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                                  std::uint64_t index) noexcept {
    return splitmix64(splitmix64(splitmix64(seed) ^ (stream * 0xD6E8FEB86659FD93ULL)) ^ index);
}

/// Stream tags used when splitting one run seed into independent streams.
namespace stream {
inline constexpr std::uint64_t scenarios = 1;
inline constexpr std::uint64_t true_disturbance = 2;
inline constexpr std::uint64_t run = 3;
}  // namespace stream

enum class DisturbanceKind { Normal, Uniform, Zero };

[[nodiscard]] inline DisturbanceKind parse_disturbance_kind(std::string_view s) {
    if (s == "normal") return DisturbanceKind::Normal;
    if (s == "uniform") return DisturbanceKind::Uniform;
    if (s == "zero") return DisturbanceKind::Zero;
    throw DomainError("unknown disturbance kind: " + std::string(s));
}

[[nodiscard]] constexpr std::string_view to_string(DisturbanceKind k) {
    switch (k) {
        case DisturbanceKind::Normal: return "normal";
        case DisturbanceKind::Uniform: return "uniform";
        case DisturbanceKind::Zero: return "zero";
    }
    return "normal";
}

/// Zero-mean, unit-variance variates from a seeded engine (or exact zeros
/// for DisturbanceKind::Zero, used for deterministic reference runs).
class DisturbanceStream {
public:
    explicit DisturbanceStream(std::uint64_t seed, DisturbanceKind kind = DisturbanceKind::Normal)
        : engine_(seed), kind_(kind) {}

    /// Uniform on [0, 1).
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double next() {
        if (kind_ == DisturbanceKind::Zero) return 0.0;
        if (kind_ == DisturbanceKind::Uniform) return std::sqrt(3.0) * (2.0 * uniform01() - 1.0);
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double a = 0.0, b = 0.0, s = 0.0;
        do {
            a = 2.0 * uniform01() - 1.0;
            b = 2.0 * uniform01() - 1.0;
            s = a * a + b * b;
        } while (s >= 1.0 || s == 0.0);
        const double scale = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = b * scale;
        has_spare_ = true;
        return a * scale;
    }

    Vector next_vector(Eigen::Index dim) {
        Vector v(dim);
        for (Eigen::Index c = 0; c < dim; ++c) v(c) = next();
        return v;
    }

private:
    std::mt19937_64 engine_;
    DisturbanceKind kind_;
    double spare_{0.0};
    bool has_spare_{false};
};

/// m disturbance paths of length N; path i, step k is d^i_k.
class ScenarioSet {
public:
    ScenarioSet(int m, int horizon, int d_dim)
        : m_(m), horizon_(horizon), d_dim_(d_dim), data_(Matrix::Zero(m, horizon * d_dim)) {}

    [[nodiscard]] int count() const { return m_; }
    [[nodiscard]] int horizon() const { return horizon_; }
    [[nodiscard]] int d_dim() const { return d_dim_; }

    /// d^i_k as a d_dim-vector view.
    [[nodiscard]] auto sample(int i, int k) const { return data_.row(i).segment(k * d_dim_, d_dim_).transpose(); }
    [[nodiscard]] auto sample(int i, int k) { return data_.row(i).segment(k * d_dim_, d_dim_).transpose(); }

    /// Whole path i stacked as (d_0; ...; d_{N-1}).
    [[nodiscard]] Vector path(int i) const { return data_.row(i).transpose(); }

    /// Row i holds path i.
    [[nodiscard]] const Matrix& data() const { return data_; }
    Matrix& data() { return data_; }

    [[nodiscard]] bool operator==(const ScenarioSet& o) const {
        return m_ == o.m_ && horizon_ == o.horizon_ && d_dim_ == o.d_dim_ && data_ == o.data_;
    }

private:
    int m_;
    int horizon_;
    int d_dim_;
    Matrix data_;
};

/// Draws m*N*d_dim independent variates, scenario-major then step then component.
[[nodiscard]] inline ScenarioSet draw_scenarios(std::uint64_t seed, int m, int horizon, int d_dim,
                                                DisturbanceKind kind = DisturbanceKind::Normal) {
    if (m < 1 || horizon < 1 || d_dim < 1)
        throw DomainError("draw_scenarios: m, N and d_dim must be positive");
    ScenarioSet set(m, horizon, d_dim);
    DisturbanceStream rng(seed, kind);
    for (int i = 0; i < m; ++i)
        for (int c = 0; c < horizon * d_dim; ++c) set.data()(i, c) = rng.next();
    return set;
}

/// Smallest integer m with m >= rho / epsilon - 1.
[[nodiscard]] inline long long sample_size_theorem(int rho, double epsilon) {
    if (rho < 1) throw DomainError("sample_size_theorem: rho must be >= 1");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("sample_size_theorem: epsilon must lie in (0, 1)");
    const double bound = static_cast<double>(rho) / epsilon - 1.0;
    // rho/epsilon is rounded; do not let a representation error of a few ulps
    // push an exact integer bound up by one.
    const double snapped = std::nearbyint(bound);
    const double v = std::abs(bound - snapped) <= 1e-9 * std::max(1.0, std::abs(bound)) ? snapped : std::ceil(bound);
    return std::max(1LL, static_cast<long long>(v));
}

/// log of sum_{j=0}^{rho-1} C(m, j) eps^j (1-eps)^(m-j), evaluated with
/// log-sum-exp. Equals 0 (probability 1) whenever m < rho.
[[nodiscard]] inline double log_binomial_tail(long long m, int rho, double epsilon) {
    if (m < rho) return 0.0;
    const double le = std::log(epsilon);
    const double l1e = std::log1p(-epsilon);
    const double lgm = std::lgamma(static_cast<double>(m) + 1.0);
    double max_term = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(static_cast<std::size_t>(rho));
    for (int j = 0; j < rho; ++j) {
        const double dj = j;
        const double dm = static_cast<double>(m);
        const double t = lgm - std::lgamma(dj + 1.0) - std::lgamma(dm - dj + 1.0) + dj * le + (dm - dj) * l1e;
        terms[static_cast<std::size_t>(j)] = t;
        max_term = std::max(max_term, t);
    }
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - max_term);
    return std::min(0.0, max_term + std::log(acc));
}

/// Minimal m whose binomial tail (rho - 1 successes or fewer, success
/// probability epsilon) is at most beta. Doubling search then bisection.
[[nodiscard]] inline long long sample_size_lemma(int rho, double epsilon, double beta) {
    if (rho < 1) throw DomainError("sample_size_lemma: rho must be >= 1");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw DomainError("sample_size_lemma: epsilon must lie in (0, 1)");
    if (!(beta > 0.0 && beta < 1.0)) throw DomainError("sample_size_lemma: beta must lie in (0, 1)");
    constexpr long long limit = 1'000'000'000LL;
    const double log_beta = std::log(beta);
    auto ok = [&](long long m) { return log_binomial_tail(m, rho, epsilon) <= log_beta; };

    long long hi = std::max<long long>(rho, 1);
    long long lo = hi - 1;  // tail(lo) = 1 > beta
    while (!ok(hi)) {
        lo = hi;
        hi *= 2;
        if (hi > 2 * limit) throw Overflow("sample_size_lemma: required m exceeds 1e9");
    }
    while (hi - lo > 1) {
        const long long mid = lo + (hi - lo) / 2;
        if (ok(mid)) hi = mid;
        else lo = mid;
    }
    if (hi > limit) throw Overflow("sample_size_lemma: required m exceeds 1e9");
    return hi;
}

}  // namespace pssmpc
