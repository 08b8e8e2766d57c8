#pragma once

#include <cstdint>
#include <stdexcept>

namespace smoothcop {

// Tolerance/iteration budget for the iterative evaluations below.
// rel_tol must lie in (0, 1e-6]; max_iter must be at least 100.
struct Accuracy {
    double rel_tol = 1e-14;
    int max_iter = 2000;

    Accuracy() = default;
    Accuracy(double rel_tol_, int max_iter_) : rel_tol(rel_tol_), max_iter(max_iter_) {
        if (!(rel_tol > 0.0) || rel_tol > 1e-6)
            throw std::invalid_argument("Accuracy: rel_tol must lie in (0, 1e-6]");
        if (max_iter < 100)
            throw std::invalid_argument("Accuracy: max_iter must be >= 100");
    }
};

// Natural log of the gamma function for x > 0.
// Relative error <= 1e-12 on [1e-3, 1e6]; exactly 0 at x = 1 and x = 2.
double log_gamma(double x);

// Regularized incomplete beta function I_x(a, b) for a, b > 0 and x in [0, 1].
// Continued-fraction evaluation with the symmetry switch at x > (a+1)/(a+b+2).
double reg_inc_beta(double a, double b, double x, const Accuracy& acc = {});

// Upper tail Pr(S >= k) for S ~ Binomial(m, p), valid for 0 <= k <= m + 1.
// Uses Pr(S >= k) = I_p(k, m - k + 1) for 1 <= k <= m; stable for m up to ~1e6.
double binom_tail(std::int64_t k, std::int64_t m, double p, const Accuracy& acc = {});

namespace detail {

// log Pr(S = k) for S ~ Binomial(m, p) with p in (0, 1), via log_gamma.
double log_binom_pmf(std::int64_t k, std::int64_t m, double p);

}  // namespace detail

}  // namespace smoothcop
