#include "smoothcop/smoothing.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "smoothcop/empirical.hpp"

namespace smoothcop {

namespace {

// ceil(x) with a snap to nearby integers (pow rounding guard).
std::int64_t snap_ceil(double x) {
    const double r = std::nearbyint(x);
    if (std::fabs(x - r) <= 1e-6 * std::max(1.0, std::fabs(x)))
        return static_cast<std::int64_t>(r);
    return static_cast<std::int64_t>(std::ceil(x));
}

void check_unit_point(std::span<const double> u) {
    for (double v : u)
        if (!(v >= 0.0 && v <= 1.0))
            throw std::domain_error("smoothing: coordinates must lie in [0, 1]");
}

}  // namespace

std::int64_t ceil_pow(std::size_t n, double gamma) {
    if (gamma == 1.0) return static_cast<std::int64_t>(n);
    return std::max<std::int64_t>(1, snap_ceil(std::pow(static_cast<double>(n), gamma)));
}

SmoothingScheme SmoothingScheme::bernstein_fixed(std::int64_t m, MonteCarloSpec mc) {
    if (m < 1) throw std::invalid_argument("SmoothingScheme: m must be >= 1");
    mc.validate();
    SmoothingScheme s;
    s.kind = SmoothingKind::bernstein_fixed;
    s.m = m;
    s.gamma = std::numeric_limits<double>::quiet_NaN();
    s.mc = mc;
    return s;
}

SmoothingScheme SmoothingScheme::bernstein_rate(double gamma, MonteCarloSpec mc) {
    if (!(gamma >= 1.0 && gamma < 2.0))
        throw std::invalid_argument("SmoothingScheme: gamma must lie in [1, 2)");
    mc.validate();
    SmoothingScheme s;
    s.kind = SmoothingKind::bernstein_rate;
    s.gamma = gamma;
    s.mc = mc;
    return s;
}

SmoothingScheme SmoothingScheme::beta_copula(MonteCarloSpec mc) {
    mc.validate();
    SmoothingScheme s;
    s.kind = SmoothingKind::beta_copula;
    s.gamma = 1.0;
    s.mc = mc;
    return s;
}

SmoothingScheme SmoothingScheme::adaptive(double gamma, AdaptiveRule rule, MonteCarloSpec mc) {
    if (!(gamma >= 1.0 && gamma < 2.0))
        throw std::invalid_argument("SmoothingScheme: gamma must lie in [1, 2)");
    mc.validate();
    SmoothingScheme s;
    s.kind = SmoothingKind::adaptive_bernstein;
    s.gamma = gamma;
    s.rule = rule;
    s.mc = mc;
    return s;
}

const char* SmoothingScheme::kind_name() const {
    switch (kind) {
        case SmoothingKind::bernstein_fixed: return "bernstein_fixed";
        case SmoothingKind::bernstein_rate: return "bernstein_rate";
        case SmoothingKind::beta_copula: return "beta_copula";
        case SmoothingKind::adaptive_bernstein: return "adaptive_bernstein";
    }
    return "?";
}

ResolvedSmoothing resolve(const SmoothingScheme& scheme, std::size_t n, std::size_t d) {
    if (n == 0 || d == 0) throw std::invalid_argument("resolve: n, d must be positive");
    scheme.mc.validate();
    ResolvedSmoothing r;
    r.kind = scheme.kind;
    r.gamma = scheme.gamma;
    r.mc = scheme.mc;
    switch (scheme.kind) {
        case SmoothingKind::bernstein_fixed:
            if (scheme.m < 1) throw std::invalid_argument("resolve: m must be >= 1");
            r.degrees.assign(d, scheme.m);
            break;
        case SmoothingKind::bernstein_rate:
            r.degrees.assign(d, ceil_pow(n, scheme.gamma));
            break;
        case SmoothingKind::beta_copula:
            r.degrees.assign(d, static_cast<std::int64_t>(n));
            break;
        case SmoothingKind::adaptive_bernstein:
            if (scheme.rule == AdaptiveRule::iqr)
                throw std::invalid_argument(
                    "resolve: the iqr rule reads the sample; use resolve(scheme, sample)");
            r.degrees.assign(d, ceil_pow(n, scheme.gamma));
            break;
    }
    return r;
}

ResolvedSmoothing resolve(const SmoothingScheme& scheme, const Sample& sample) {
    const std::size_t n = sample.rows(), d = sample.dim();
    if (scheme.kind != SmoothingKind::adaptive_bernstein || scheme.rule != AdaptiveRule::iqr)
        return resolve(scheme, n, d);
    scheme.mc.validate();
    ResolvedSmoothing r;
    r.kind = scheme.kind;
    r.gamma = scheme.gamma;
    r.mc = scheme.mc;
    const std::int64_t floor_m = ceil_pow(n, scheme.gamma);
    r.degrees.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
        auto col = sample.column(j);
        std::sort(col.begin(), col.end());
        const std::size_t i25 = static_cast<std::size_t>(std::ceil(0.25 * n)) - 1;
        const std::size_t i75 = static_cast<std::size_t>(std::ceil(0.75 * n)) - 1;
        const double iqr = std::max(col[i75] - col[i25], 1.0 / static_cast<double>(n));
        r.degrees[j] = std::max(floor_m, snap_ceil(static_cast<double>(n) / iqr));
    }
    return r;
}

namespace detail {

PmfWindow binom_pmf_window(std::int64_t m, double p) {
    PmfWindow w;
    if (p == 0.0) {
        w.klo = 0;
        w.pmf = {1.0};
        return w;
    }
    if (p == 1.0) {
        w.klo = m;
        w.pmf = {1.0};
        return w;
    }
    const double mean = static_cast<double>(m) * p;
    const double sd = std::sqrt(mean * (1.0 - p));
    const double c = 40.0 * sd + 100.0;
    const std::int64_t klo = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(mean - c)));
    const std::int64_t khi = std::min<std::int64_t>(m, static_cast<std::int64_t>(std::ceil(mean + c)));
    const std::int64_t kc =
        std::clamp(static_cast<std::int64_t>(std::llround(mean)), klo, khi);
    w.klo = klo;
    w.pmf.assign(static_cast<std::size_t>(khi - klo + 1), 0.0);
    const double odds = p / (1.0 - p);
    w.pmf[kc - klo] = std::exp(log_binom_pmf(kc, m, p));
    for (std::int64_t k = kc; k < khi; ++k)
        w.pmf[k + 1 - klo] =
            w.pmf[k - klo] * (static_cast<double>(m - k) / static_cast<double>(k + 1)) * odds;
    for (std::int64_t k = kc; k > klo; --k)
        w.pmf[k - 1 - klo] = w.pmf[k - klo] * (static_cast<double>(k) / static_cast<double>(m - k + 1)) / odds;
    return w;
}

TailTable build_tail_table(std::int64_t m, double p, std::size_t n) {
    TailTable t;
    t.tail.assign(n + 1, 0.0);
    if (p == 0.0) {
        t.r_begin = 1;  // the all-ones region is empty
        t.r_end = 0;
        return t;
    }
    if (p == 1.0) {
        std::fill(t.tail.begin() + 1, t.tail.end(), 1.0);
        t.r_begin = n + 1;  // every rank sits in the all-ones region
        t.r_end = n;
        return t;
    }
    const PmfWindow w = binom_pmf_window(m, p);
    const std::int64_t khi = w.klo + static_cast<std::int64_t>(w.pmf.size()) - 1;
    std::vector<double> tail_k(w.pmf.size() + 1, 0.0);
    for (std::size_t i = w.pmf.size(); i-- > 0;)
        tail_k[i] = std::min(1.0, tail_k[i + 1] + w.pmf[i]);
    const auto threshold = [&](std::size_t r) {
        return ceil_div(m * static_cast<std::int64_t>(r), static_cast<std::int64_t>(n));
    };
    // Thresholds are nondecreasing in the rank, so the ranks split into an
    // all-ones prefix, a window region, and an all-zeros suffix.
    t.r_begin = 1;
    while (t.r_begin <= n && threshold(t.r_begin) < w.klo) ++t.r_begin;
    t.r_end = n;
    while (t.r_end >= 1 && threshold(t.r_end) > khi) --t.r_end;
    for (std::size_t r = 1; r <= n; ++r) {
        if (r < t.r_begin)
            t.tail[r] = 1.0;
        else if (r > t.r_end)
            t.tail[r] = 0.0;
        else
            t.tail[r] = tail_k[threshold(r) - w.klo];
    }
    return t;
}

}  // namespace detail

BinomialSampler::BinomialSampler(std::int64_t m, double p) : m_(m) {
    if (m < 1) throw std::invalid_argument("BinomialSampler: m must be >= 1");
    if (!(p >= 0.0 && p <= 1.0))
        throw std::invalid_argument("BinomialSampler: p must lie in [0, 1]");
    const detail::PmfWindow w = detail::binom_pmf_window(m, p);
    klo_ = w.klo;
    cdf_.resize(w.pmf.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < w.pmf.size(); ++i) {
        acc += w.pmf[i];
        cdf_[i] = acc;
    }
}

std::int64_t BinomialSampler::draw(rng::Engine& eng) const {
    const double u = eng.uniform01();
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    const std::size_t idx =
        it == cdf_.end() ? cdf_.size() - 1 : static_cast<std::size_t>(it - cdf_.begin());
    return klo_ + static_cast<std::int64_t>(idx);
}

std::vector<double> smoothing_draw(const ResolvedSmoothing& scheme, std::span<const double> u,
                                   rng::Engine& eng) {
    if (u.size() != scheme.degrees.size())
        throw std::domain_error("smoothing_draw: dimension mismatch");
    check_unit_point(u);
    std::vector<double> w(u.size());
    for (std::size_t j = 0; j < u.size(); ++j) {
        const BinomialSampler sampler(scheme.degrees[j], u[j]);
        w[j] = static_cast<double>(sampler.draw(eng)) / static_cast<double>(scheme.degrees[j]);
    }
    return w;
}

std::vector<double> smoothing_draw(const SmoothingScheme& scheme, std::span<const double> u,
                                   const Sample& sample, std::uint64_t seed) {
    rng::Engine eng(seed);
    return smoothing_draw(resolve(scheme, sample), u, eng);
}

double smooth_copula_closed(const RankMatrix& ranks, const ResolvedSmoothing& scheme,
                            std::span<const double> u, const Accuracy& acc) {
    const std::size_t n = ranks.rows(), d = ranks.dim();
    if (scheme.degrees.size() != d)
        throw std::domain_error("smooth_copula_closed: scheme dimension mismatch");
    if (u.size() != d) throw std::domain_error("smooth_copula_closed: dimension mismatch");
    check_unit_point(u);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double prod = 1.0;
        for (std::size_t j = 0; j < d && prod != 0.0; ++j) {
            const std::int64_t m = scheme.degrees[j];
            const std::int64_t k =
                detail::ceil_div(m * ranks(i, j), static_cast<std::int64_t>(n));
            prod *= binom_tail(k, m, u[j], acc);
        }
        total += prod;
    }
    return total / static_cast<double>(n);
}

McEstimate smooth_copula_mc(const RankMatrix& ranks, const ResolvedSmoothing& scheme,
                            std::span<const double> u) {
    const std::size_t d = ranks.dim();
    if (scheme.degrees.size() != d)
        throw std::domain_error("smooth_copula_mc: scheme dimension mismatch");
    if (u.size() != d) throw std::domain_error("smooth_copula_mc: dimension mismatch");
    check_unit_point(u);
    // Per-call stream keyed on (seed, u): evaluation order never matters.
    std::uint64_t stream = rng::mix64(0x5355424Dull + scheme.mc.seed);
    for (double v : u)
        stream = rng::mix64(stream + 0x9E3779B97F4A7C15ull + std::bit_cast<std::uint64_t>(v));
    rng::Engine eng(stream);

    std::vector<BinomialSampler> samplers;
    samplers.reserve(d);
    for (std::size_t j = 0; j < d; ++j) samplers.emplace_back(scheme.degrees[j], u[j]);

    const std::int64_t mdraws = scheme.mc.draws;
    std::vector<double> w(d);
    double sum = 0.0, sumsq = 0.0;
    for (std::int64_t t = 0; t < mdraws; ++t) {
        for (std::size_t j = 0; j < d; ++j)
            w[j] = static_cast<double>(samplers[j].draw(eng)) /
                   static_cast<double>(scheme.degrees[j]);
        const double c = empirical_copula(ranks, w);
        sum += c;
        sumsq += c * c;
    }
    McEstimate out;
    out.estimate = sum / static_cast<double>(mdraws);
    if (mdraws > 1) {
        const double var =
            std::max(0.0, (sumsq - sum * sum / static_cast<double>(mdraws)) /
                              static_cast<double>(mdraws - 1));
        out.stderr_est = std::sqrt(var / static_cast<double>(mdraws));
    }
    return out;
}

VarianceAuditReport variance_audit(const ResolvedSmoothing& scheme, std::size_t n,
                                   std::span<const double> u_grid, std::int64_t draws,
                                   std::uint64_t seed, std::optional<double> gamma_bound) {
    if (draws < 1000) throw std::invalid_argument("variance_audit: draws must be >= 1000");
    check_unit_point(u_grid);
    const double gamma = gamma_bound.value_or(scheme.gamma);
    if (!std::isfinite(gamma))
        throw std::invalid_argument("variance_audit: no gamma available for the bound");
    const double n_gamma = std::pow(static_cast<double>(n), gamma);

    VarianceAuditReport report;
    report.gamma = gamma;
    report.draws = draws;
    for (std::size_t j = 0; j < scheme.degrees.size(); ++j) {
        const double m = static_cast<double>(scheme.degrees[j]);
        for (std::size_t g = 0; g < u_grid.size(); ++g) {
            const double u = u_grid[g];
            const BinomialSampler sampler(scheme.degrees[j], u);
            rng::Engine eng(rng::derive_seed({seed, j, g}));
            // Accumulate moments of W - u; the shift keeps the sums small.
            double s1 = 0.0, s2 = 0.0, s4 = 0.0;
            for (std::int64_t t = 0; t < draws; ++t) {
                const double dx = static_cast<double>(sampler.draw(eng)) / m - u;
                s1 += dx;
                s2 += dx * dx;
                s4 += dx * dx * dx * dx;
            }
            const double mdraws = static_cast<double>(draws);
            const double mean = s1 / mdraws;
            const double m2 = std::max(0.0, s2 / mdraws - mean * mean);
            const double variance = m2 * mdraws / (mdraws - 1.0);
            const double m4 = s4 / mdraws;  // shift by the true-scale mean is negligible
            const double se = std::sqrt(
                std::max(0.0, (m4 - variance * variance * (mdraws - 3.0) / (mdraws - 1.0)) /
                                  mdraws));
            const double bound = u * (1.0 - u) / n_gamma;
            const bool violation = variance > bound + 3.0 * se;
            report.rows.push_back({j, u, variance, bound, se, violation});
            report.violations += violation;
        }
    }
    return report;
}

void VarianceAuditReport::write_csv(std::ostream& out) const {
    out << "margin,u,variance,bound,se,violation\n";
    char buf[160];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g,%d",
                      row.margin + 1, row.u, row.variance, row.bound, row.se,
                      row.violation ? 1 : 0);
        out << buf << '\n';
    }
}

}  // namespace smoothcop
