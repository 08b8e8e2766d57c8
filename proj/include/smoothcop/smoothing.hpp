#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "smoothcop/rng.hpp"
#include "smoothcop/sample.hpp"
#include "smoothcop/special_functions.hpp"

namespace smoothcop {

struct MonteCarloSpec {
    std::int64_t draws = 200;
    std::uint64_t seed = 0x5EEDu;

    void validate() const {
        if (draws < 1) throw std::invalid_argument("MonteCarloSpec: draws must be >= 1");
    }
};

// Product-binomial smoothing measures: component j of the smoothing vector is
// S_j / m_j with S_j ~ Binomial(m_j, u_j), independent across margins. The
// kinds differ only in how the degrees m_j are chosen, so every kind admits
// the same closed-form evaluation.
enum class SmoothingKind { bernstein_fixed, bernstein_rate, beta_copula, adaptive_bernstein };

enum class AdaptiveRule { floor_only, iqr };

struct SmoothingScheme {
    SmoothingKind kind = SmoothingKind::beta_copula;
    std::int64_t m = 1;          // bernstein_fixed only
    double gamma = 1.0;          // bernstein_rate / adaptive: in [1, 2)
    AdaptiveRule rule = AdaptiveRule::iqr;
    MonteCarloSpec mc;

    static SmoothingScheme bernstein_fixed(std::int64_t m, MonteCarloSpec mc = {});
    static SmoothingScheme bernstein_rate(double gamma, MonteCarloSpec mc = {});
    static SmoothingScheme beta_copula(MonteCarloSpec mc = {});
    static SmoothingScheme adaptive(double gamma, AdaptiveRule rule = AdaptiveRule::iqr,
                                    MonteCarloSpec mc = {});
    const char* kind_name() const;
};

// Scheme bound to a concrete sample size: per-margin degrees are fixed.
struct ResolvedSmoothing {
    SmoothingKind kind;
    std::vector<std::int64_t> degrees;
    double gamma;  // NaN for bernstein_fixed
    MonteCarloSpec mc;
};

// ceil(n^gamma) with a snap to nearby integers, so that e.g. 100^1.5 resolves
// to exactly 1000 despite pow() rounding.
std::int64_t ceil_pow(std::size_t n, double gamma);

ResolvedSmoothing resolve(const SmoothingScheme& scheme, std::size_t n, std::size_t d);
// The iqr rule reads per-column interquartile ranges off the sample, so the
// data-adaptive kind needs this overload: m_j = max(ceil(n^gamma), ceil(n/IQR_j)),
// IQR floored at 1/n.
ResolvedSmoothing resolve(const SmoothingScheme& scheme, const Sample& sample);

// Exact Binomial(m, p) sampler via inversion on a windowed cdf table.
// Deterministic for a given engine state; the window truncates less than
// 1e-60 of probability mass.
class BinomialSampler {
  public:
    BinomialSampler(std::int64_t m, double p);
    std::int64_t draw(rng::Engine& eng) const;
    std::int64_t support_lo() const { return klo_; }
    std::int64_t support_hi() const { return klo_ + std::int64_t(cdf_.size()) - 1; }

  private:
    std::int64_t m_, klo_;
    std::vector<double> cdf_;
};

// One draw of the smoothing vector W at centre u.
std::vector<double> smoothing_draw(const ResolvedSmoothing& scheme, std::span<const double> u,
                                   rng::Engine& eng);
std::vector<double> smoothing_draw(const SmoothingScheme& scheme, std::span<const double> u,
                                   const Sample& sample, std::uint64_t seed);

// Closed form of the smoothed empirical copula:
//   C_n^nu(u) = (1/n) sum_i prod_j Pr(S_j >= ceil(m_j R_ij / n)),
// with the ceiling taken on exact integer rationals.
double smooth_copula_closed(const RankMatrix& ranks, const ResolvedSmoothing& scheme,
                            std::span<const double> u, const Accuracy& acc = {});

struct McEstimate {
    double estimate = 0.0;
    double stderr_est = 0.0;
};

// Monte Carlo average of C_n over draws of the smoothing vector. The stream
// is derived from (mc.seed, u), so evaluations are order-independent.
McEstimate smooth_copula_mc(const RankMatrix& ranks, const ResolvedSmoothing& scheme,
                            std::span<const double> u);

// Empirical variance of each margin's smoothing component against the bound
// u(1-u)/n^gamma, with a 3-standard-error Monte Carlo slack.
struct VarianceAuditRow {
    std::size_t margin;  // 0-based
    double u, variance, bound, se;
    bool violation;
};

struct VarianceAuditReport {
    double gamma;
    std::int64_t draws;
    std::vector<VarianceAuditRow> rows;
    std::size_t violations = 0;

    void write_csv(std::ostream& out) const;
};

VarianceAuditReport variance_audit(const ResolvedSmoothing& scheme, std::size_t n,
                                   std::span<const double> u_grid, std::int64_t draws,
                                   std::uint64_t seed,
                                   std::optional<double> gamma_bound = std::nullopt);

namespace detail {

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

// Window of non-negligible Binomial(m, p) mass: [klo, klo + pmf.size() - 1].
struct PmfWindow {
    std::int64_t klo = 0;
    std::vector<double> pmf;
};
PmfWindow binom_pmf_window(std::int64_t m, double p);

// Tail probabilities by rank for one margin: tail[r] = Pr(S >= ceil(m r / n))
// for r = 1..n (entry 0 unused). Ranks below r_begin have tail exactly 1.0;
// ranks above r_end have tail exactly 0.0 (window truncation, < 1e-60 off).
struct TailTable {
    std::vector<double> tail;  // size n + 1
    std::size_t r_begin = 1;   // first rank whose tail is below 1
    std::size_t r_end = 0;     // last rank whose tail is above 0
};
TailTable build_tail_table(std::int64_t m, double p, std::size_t n);

}  // namespace detail

}  // namespace smoothcop
