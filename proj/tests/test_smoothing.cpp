#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "smoothcop/copula.hpp"
#include "smoothcop/rng.hpp"
#include "smoothcop/smoothing.hpp"

using namespace smoothcop;

namespace {

RankMatrix make_ranks(const std::vector<std::vector<std::int64_t>>& rows) {
    RankMatrix r(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) r(i, j) = rows[i][j];
    return r;
}

RankMatrix random_rank_matrix(std::size_t n, std::size_t d, std::uint64_t seed) {
    rng::Engine eng(seed);
    RankMatrix r(n, d);
    std::vector<std::int64_t> perm(n);
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = 0; i < n; ++i) perm[i] = std::int64_t(i + 1);
        for (std::size_t i = n; i > 1; --i) {
            const std::size_t k = std::size_t(eng.next_u64() % i);
            std::swap(perm[i - 1], perm[k]);
        }
        for (std::size_t i = 0; i < n; ++i) r(i, j) = perm[i];
    }
    return r;
}

std::vector<std::vector<std::int64_t>> rows_of(const RankMatrix& r) {
    std::vector<std::vector<std::int64_t>> rows(r.rows(), std::vector<std::int64_t>(r.dim()));
    for (std::size_t i = 0; i < r.rows(); ++i)
        for (std::size_t j = 0; j < r.dim(); ++j) rows[i][j] = r(i, j);
    return rows;
}

}  // namespace

TEST_CASE("ceil_pow matches exact integer powers and rounds up otherwise") {
    CHECK(ceil_pow(100, 1.5) == 1000);
    CHECK(ceil_pow(4, 1.0) == 4);
    CHECK(ceil_pow(1024, 1.0) == 1024);
    CHECK(ceil_pow(2, 2.0) == 4);  // gamma = 2 is out of scheme range but the power is exact
    CHECK(ceil_pow(10, 1.25) == 18);   // 10^1.25 = 17.78...
    CHECK(ceil_pow(3, 1.5) == 6);      // 3^1.5 = 5.196...
    CHECK(ceil_pow(4096, 1.5) == 262144);
}

TEST_CASE("scheme factories and kind names") {
    CHECK(SmoothingScheme::bernstein_fixed(7).kind_name() ==
          doctest::String("bernstein_fixed"));
    CHECK(SmoothingScheme::bernstein_rate(1.25).kind_name() ==
          doctest::String("bernstein_rate"));
    CHECK(SmoothingScheme::beta_copula().kind_name() == doctest::String("beta_copula"));
    CHECK(SmoothingScheme::adaptive(1.5).kind_name() ==
          doctest::String("adaptive_bernstein"));
    CHECK_THROWS_AS(SmoothingScheme::bernstein_fixed(0), std::invalid_argument);
    CHECK_THROWS_AS(SmoothingScheme::bernstein_rate(0.9), std::invalid_argument);
    CHECK_THROWS_AS(SmoothingScheme::bernstein_rate(2.0), std::invalid_argument);
    CHECK_THROWS_AS(SmoothingScheme::adaptive(2.5), std::invalid_argument);
}

TEST_CASE("resolve fixes degrees per kind") {
    const std::size_t n = 100, d = 2;
    const auto fixed = resolve(SmoothingScheme::bernstein_fixed(7), n, d);
    REQUIRE(fixed.degrees.size() == 2);
    CHECK(fixed.degrees[0] == 7);
    CHECK(fixed.degrees[1] == 7);
    CHECK(std::isnan(fixed.gamma));

    const auto rate = resolve(SmoothingScheme::bernstein_rate(1.5), n, d);
    CHECK(rate.degrees[0] == 1000);
    CHECK(rate.gamma == 1.5);

    const auto beta = resolve(SmoothingScheme::beta_copula(), n, d);
    CHECK(beta.degrees[0] == std::int64_t(n));
    CHECK(beta.degrees[1] == std::int64_t(n));
    CHECK(beta.gamma == 1.0);

    const auto floor_rule =
        resolve(SmoothingScheme::adaptive(1.25, AdaptiveRule::floor_only), n, d);
    CHECK(floor_rule.degrees[0] == ceil_pow(n, 1.25));
}

TEST_CASE("resolve rejects the data-adaptive rule without a sample") {
    CHECK_THROWS_WITH_AS(resolve(SmoothingScheme::adaptive(1.5), 100, 2),
                         "resolve: the iqr rule reads the sample; use resolve(scheme, sample)",
                         std::invalid_argument);
}

TEST_CASE("adaptive iqr rule takes the max of rate floor and concentration term") {
    // Column 0 values {0.1, 0.2, 0.3, 0.9}: quartiles at order stats 1 and 3
    // give raw IQR = 0.2, below the 1/n = 0.25 floor, so the floored spread
    // yields ceil(4 / 0.25) = 16 > ceil_pow(4, 1.5) = 8.
    const Sample s(4, 2, {0.1, 0.5, 0.2, 0.9, 0.3, 0.1, 0.9, 0.72});
    const auto r15 = resolve(SmoothingScheme::adaptive(1.5), s);
    CHECK(r15.degrees[0] == 16);
    // Column 1 IQR = 0.72 - 0.1 = 0.62 -> ceil(4 / 0.62) = 7; rate floor 8 wins.
    CHECK(r15.degrees[1] == 8);
}

TEST_CASE("binomial pmf window carries the full mass and matches the exact pmf") {
    for (std::int64_t m : {1, 2, 13, 200})
        for (double p : {0.001, 0.25, 0.5, 0.93, 0.999}) {
            const auto w = detail::binom_pmf_window(m, p);
            const auto exact = oracle::binom_pmf_exact(m, (long double)p);
            long double mass = 0.0L;
            for (double q : w.pmf) mass += (long double)q;
            CHECK(std::abs(double(mass - 1.0L)) < 1e-12);
            for (std::size_t k = 0; k < w.pmf.size(); ++k) {
                const auto idx = std::size_t(w.klo) + k;
                CHECK(std::abs(w.pmf[k] - double(exact[idx])) < 1e-13);
            }
            // Everything outside the window is negligible.
            long double outside = 0.0L;
            for (std::int64_t k = 0; k <= m; ++k)
                if (k < w.klo || k >= w.klo + std::int64_t(w.pmf.size()))
                    outside += exact[std::size_t(k)];
            CHECK(double(outside) < 1e-50);
        }
}

TEST_CASE("pmf window degenerates correctly at p = 0 and p = 1") {
    const auto lo = detail::binom_pmf_window(9, 0.0);
    REQUIRE(lo.pmf.size() == 1);
    CHECK(lo.klo == 0);
    CHECK(lo.pmf[0] == 1.0);
    const auto hi = detail::binom_pmf_window(9, 1.0);
    REQUIRE(hi.pmf.size() == 1);
    CHECK(hi.klo == 9);
    CHECK(hi.pmf[0] == 1.0);
}

TEST_CASE("tail table matches binom_tail rank by rank") {
    const std::size_t n = 40;
    for (std::int64_t m : {5, 40, 160})
        for (double p : {0.0, 0.013, 0.5, 0.87, 1.0}) {
            const auto t = detail::build_tail_table(m, p, n);
            REQUIRE(t.tail.size() == n + 1);
            for (std::size_t r = 1; r <= n; ++r) {
                const std::int64_t k = detail::ceil_div(m * std::int64_t(r), std::int64_t(n));
                const double want = binom_tail(k, m, p);
                CHECK(std::abs(t.tail[r] - want) < 1e-12);
                if (r < t.r_begin) CHECK(t.tail[r] == 1.0);
                if (r > t.r_end) CHECK(t.tail[r] == 0.0);
            }
        }
}

TEST_CASE("closed form with n = 1, m = 1 is the product of coordinates") {
    // One observation, rank 1: ceil(1 * 1 / 1) = 1, so each factor is
    // Pr(Bin(1, u_j) >= 1) = u_j.
    const auto r = make_ranks({{1, 1}});
    const auto rs = resolve(SmoothingScheme::bernstein_fixed(1), 1, 2);
    for (double a : {0.0, 0.3, 0.5, 1.0})
        for (double b : {0.0, 0.25, 0.9, 1.0}) {
            const std::array<double, 2> u{a, b};
            CHECK(smooth_copula_closed(r, rs, u) == doctest::Approx(a * b).epsilon(1e-14));
        }
}

TEST_CASE("closed form equals exhaustive enumeration over the binomial support") {
    for (std::uint64_t seed : {501u, 502u}) {
        const auto r = random_rank_matrix(6, 2, seed);
        const auto rows = rows_of(r);
        for (std::int64_t m : {2, 5, 9}) {
            const auto rs = resolve(SmoothingScheme::bernstein_fixed(m), 6, 2);
            for (double a : {0.15, 0.5, 0.81})
                for (double b : {0.3, 0.66}) {
                    const std::array<double, 2> u{a, b};
                    const double got = smooth_copula_closed(r, rs, u);
                    const double want = oracle::smooth_enum_2d(rows, m, m, a, b);
                    CHECK(got == doctest::Approx(want).epsilon(1e-12));
                }
        }
    }
}

TEST_CASE("closed form is exact at corners and zero coordinates") {
    const auto r = random_rank_matrix(12, 2, 77);
    for (const auto& rs : {resolve(SmoothingScheme::beta_copula(), 12, 2),
                           resolve(SmoothingScheme::bernstein_rate(1.5), 12, 2)}) {
        CHECK(smooth_copula_closed(r, rs, std::array<double, 2>{0.0, 0.4}) == 0.0);
        CHECK(smooth_copula_closed(r, rs, std::array<double, 2>{0.4, 0.0}) == 0.0);
        CHECK(smooth_copula_closed(r, rs, std::array<double, 2>{0.0, 0.0}) == 0.0);
        CHECK(smooth_copula_closed(r, rs, std::array<double, 2>{1.0, 1.0}) == 1.0);
    }
}

TEST_CASE("closed form is monotone in each coordinate") {
    const auto r = random_rank_matrix(20, 2, 3001);
    const auto rs = resolve(SmoothingScheme::beta_copula(), 20, 2);
    double prev = -1.0;
    for (int i = 0; i <= 20; ++i) {
        const std::array<double, 2> u{i / 20.0, 0.63};
        const double c = smooth_copula_closed(r, rs, u);
        CHECK(c >= prev - 1e-14);
        CHECK(c >= 0.0);
        CHECK(c <= 1.0);
        prev = c;
    }
}

TEST_CASE("beta-copula margins are exactly uniform") {
    // With m_j = n the tail factor at u_k = 1 is 1 for every rank, so the
    // remaining factor averages to Pr(Bin(n, u) >= R)/n summed over a full
    // rank permutation: identity by symmetry.
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        const std::size_t n = 5 + std::size_t(seed * 5 % 46);
        const auto r = random_rank_matrix(n, 2, 9100 + seed);
        const auto rs = resolve(SmoothingScheme::beta_copula(), n, 2);
        for (int i = 0; i <= 10; ++i) {
            const double u = i / 10.0;
            CHECK(std::abs(smooth_copula_closed(r, rs, std::array<double, 2>{u, 1.0}) - u) <=
                  1e-12);
            CHECK(std::abs(smooth_copula_closed(r, rs, std::array<double, 2>{1.0, u}) - u) <=
                  1e-12);
        }
    }
}

TEST_CASE("smoothing_draw lands on the support lattice with correct moments") {
    const auto rs = resolve(SmoothingScheme::bernstein_fixed(8), 10, 2);
    rng::Engine eng(606);
    const std::array<double, 2> u{0.3, 0.7};
    const int kN = 100000;
    double s0 = 0.0, s1 = 0.0, cross = 0.0;
    for (int i = 0; i < kN; ++i) {
        const auto w = smoothing_draw(rs, u, eng);
        REQUIRE(w.size() == 2);
        for (std::size_t j = 0; j < 2; ++j) {
            const double scaled = w[j] * 8.0;
            CHECK(std::abs(scaled - std::round(scaled)) < 1e-12);
            CHECK(w[j] >= 0.0);
            CHECK(w[j] <= 1.0);
        }
        s0 += w[0];
        s1 += w[1];
        cross += (w[0] - 0.3) * (w[1] - 0.7);
    }
    // sd of the mean is sqrt(u(1-u)/m/N); 3 sigma bands.
    CHECK(std::abs(s0 / kN - 0.3) < 3.0 * std::sqrt(0.3 * 0.7 / 8.0 / kN));
    CHECK(std::abs(s1 / kN - 0.7) < 3.0 * std::sqrt(0.7 * 0.3 / 8.0 / kN));
    // Components are independent: empirical covariance within +/- 0.01.
    CHECK(std::abs(cross / kN) < 0.01);
}

TEST_CASE("smoothing_draw at endpoint centres is deterministic") {
    const auto rs = resolve(SmoothingScheme::bernstein_fixed(5), 4, 2);
    rng::Engine eng(1);
    const auto w0 = smoothing_draw(rs, std::array<double, 2>{0.0, 1.0}, eng);
    CHECK(w0[0] == 0.0);
    CHECK(w0[1] == 1.0);
}

TEST_CASE("sample-bound smoothing_draw resolves the adaptive rule") {
    const Sample s(4, 2, {0.1, 0.5, 0.2, 0.9, 0.3, 0.1, 0.9, 0.72});
    const auto w = smoothing_draw(SmoothingScheme::adaptive(1.5), std::array<double, 2>{0.4, 0.6},
                                  s, 99);
    REQUIRE(w.size() == 2);
    CHECK(w[0] >= 0.0);
    CHECK(w[0] <= 1.0);
    // Same seed, same draw.
    const auto w2 = smoothing_draw(SmoothingScheme::adaptive(1.5),
                                   std::array<double, 2>{0.4, 0.6}, s, 99);
    CHECK(w == w2);
}

TEST_CASE("BinomialSampler distribution check") {
    const std::int64_t m = 11;
    const double p = 0.42;
    BinomialSampler bs(m, p);
    CHECK(bs.support_lo() >= 0);
    CHECK(bs.support_hi() <= m);
    rng::Engine eng(4242);
    const int kN = 200000;
    std::vector<double> freq(std::size_t(m) + 1, 0.0);
    for (int i = 0; i < kN; ++i) {
        const auto k = bs.draw(eng);
        REQUIRE(k >= 0);
        REQUIRE(k <= m);
        freq[std::size_t(k)] += 1.0 / kN;
    }
    const auto exact = oracle::binom_pmf_exact(m, (long double)p);
    for (std::size_t k = 0; k <= std::size_t(m); ++k) {
        const double q = double(exact[k]);
        const double se = std::sqrt(q * (1.0 - q) / kN);
        CHECK(std::abs(freq[k] - q) < 5.0 * se + 1e-9);
    }
}

TEST_CASE("Monte Carlo estimate is reproducible and order independent") {
    const auto r = random_rank_matrix(25, 2, 31);
    auto rs = resolve(SmoothingScheme::beta_copula(), 25, 2);
    rs.mc.draws = 400;
    rs.mc.seed = 777;
    const std::array<double, 2> ua{0.35, 0.6};
    const std::array<double, 2> ub{0.8, 0.15};
    const auto a1 = smooth_copula_mc(r, rs, ua);
    const auto b1 = smooth_copula_mc(r, rs, ub);
    const auto b2 = smooth_copula_mc(r, rs, ub);
    const auto a2 = smooth_copula_mc(r, rs, ua);
    CHECK(a1.estimate == a2.estimate);
    CHECK(a1.stderr_est == a2.stderr_est);
    CHECK(b1.estimate == b2.estimate);
    CHECK(a1.stderr_est > 0.0);
}

TEST_CASE("Monte Carlo estimate brackets the closed form within 4 standard errors") {
    rng::Engine pick(88);
    int checked = 0;
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t n = 8 + std::size_t(pick.next_u64() % 25);
        const auto r = random_rank_matrix(n, 2, 600 + std::uint64_t(rep));
        auto rs = resolve(SmoothingScheme::beta_copula(), n, 2);
        rs.mc.draws = 20000;
        rs.mc.seed = 4000 + std::uint64_t(rep);
        const std::array<double, 2> u{0.1 + 0.08 * double(rep % 10), 0.9 - 0.07 * double(rep % 10)};
        const double closed = smooth_copula_closed(r, rs, u);
        const auto est = smooth_copula_mc(r, rs, u);
        CHECK(std::abs(est.estimate - closed) <= 4.0 * std::max(est.stderr_est, 1e-6));
        ++checked;
    }
    CHECK(checked == 10);
}

TEST_CASE("adaptive floor_only degrees coincide with the pure rate scheme") {
    const Sample s = CopulaModel::independence(2).sample(30, 11);
    const auto a = resolve(SmoothingScheme::adaptive(1.25, AdaptiveRule::floor_only), s);
    const auto b = resolve(SmoothingScheme::bernstein_rate(1.25), 30, 2);
    CHECK(a.degrees == b.degrees);
    const auto r = compute_ranks(s);
    const std::array<double, 2> u{0.44, 0.71};
    CHECK(smooth_copula_closed(r, a, u) ==
          doctest::Approx(smooth_copula_closed(r, b, u)).epsilon(1e-14));
}

TEST_CASE("variance audit stays under the bound with pinned seeds") {
    std::vector<double> grid;
    for (int i = 1; i < 10; ++i) grid.push_back(i / 10.0);
    for (double gamma : {1.0, 1.25, 1.5}) {
        const std::size_t n = 64;
        const auto rs = resolve(SmoothingScheme::bernstein_rate(gamma), n, 2);
        const auto rep = variance_audit(rs, n, grid, 2000, 1234);
        CHECK(rep.gamma == gamma);
        CHECK(rep.draws == 2000);
        REQUIRE(rep.rows.size() == 2 * grid.size());
        CHECK(rep.violations == 0);
        for (const auto& row : rep.rows) {
            CHECK(row.bound == doctest::Approx(row.u * (1.0 - row.u) /
                                               std::pow(double(n), gamma))
                                   .epsilon(1e-12));
            CHECK(row.se > 0.0);
            CHECK(!row.violation);
        }
    }
}

TEST_CASE("variance audit honours an explicit bound exponent") {
    std::vector<double> grid{0.5};
    const auto rs = resolve(SmoothingScheme::bernstein_fixed(4), 64, 2);
    // Var(W) = u(1-u)/4; demanding u(1-u)/64^2 must flag both margins.
    const auto rep = variance_audit(rs, 64, grid, 4000, 5, 2.0);
    CHECK(rep.violations == rep.rows.size());
}
