#pragma once

#include <span>
#include <stdexcept>

#include "smoothcop/copula.hpp"
#include "smoothcop/empirical.hpp"
#include "smoothcop/sample.hpp"
#include "smoothcop/smoothing.hpp"
#include "smoothcop/special_functions.hpp"

namespace smoothcop {

// C~_n(u) = alpha_n(u) - sum_j dC/du_j(u) alpha_{n,j}(u_j): the linearized
// empirical copula process. Zero at every point with a zero coordinate and
// at the upper corner.
double tilde_process(const Sample& sample, const CopulaModel& model,
                     std::span<const double> u);

// sqrt(n) (C_n(u) - C(u)).
double empirical_copula_process(const RankMatrix& ranks, const CopulaModel& model,
                                std::span<const double> u);

// sqrt(n) (C_n^nu(u) - C(u)).
double smooth_copula_process(const RankMatrix& ranks, const ResolvedSmoothing& scheme,
                             const CopulaModel& model, std::span<const double> u,
                             const Accuracy& acc = {});

// Sup over the grid of |empirical copula process - C~_n|.
double stute_remainder_classic(const Sample& sample, const CopulaModel& model,
                               const EvaluationGrid& grid);

// Sup over the grid of |smoothed process - C~_n|.
double stute_remainder_smooth(const Sample& sample, const CopulaModel& model,
                              const ResolvedSmoothing& scheme, const EvaluationGrid& grid);

// Samplewise three-term bound: writing the smoothed process minus C~_n as
//   sqrt(n)(int C dnu_u - C(u))                      (bias)
// + int (empirical copula process - C~_n) dnu_u      (bounded by classic sup)
// + (int C~_n dnu_u - C~_n(u))                       (drift),
// the lhs sup is at most bias_term + classic_term + smooth_drift_term. The
// bias and drift integrals are enumerated exactly over the product binomial
// support whenever prod_j (m_j + 1) <= 1e6 (support mass below 1e-60 is
// truncated), and Monte Carlo averaged with mc.draws draws per grid point
// otherwise; the inequality slack widens from 1e-10 to 5x the summed
// standard errors on Monte Carlo paths.
struct DecompositionTerms {
    double bias_term = 0.0;
    double classic_term = 0.0;
    double smooth_drift_term = 0.0;
    double lhs = 0.0;

    bool bias_exact = true;
    bool drift_exact = true;
    double bias_stderr = 0.0;   // at the maximizing grid point (0 when exact)
    double drift_stderr = 0.0;

    bool all_exact() const { return bias_exact && drift_exact; }
    double slack() const {
        const double base = 1e-10;
        if (all_exact()) return base;
        return std::max(base, 5.0 * (bias_stderr + drift_stderr));
    }
    double rhs() const { return bias_term + classic_term + smooth_drift_term; }
};

struct inequality_violation : std::runtime_error {
    DecompositionTerms terms;
    explicit inequality_violation(const DecompositionTerms& t);
};

// Computes all four terms on the shared grid and enforces the inequality,
// throwing inequality_violation if it fails beyond the slack.
DecompositionTerms decomposition_terms(const Sample& sample, const CopulaModel& model,
                                       const ResolvedSmoothing& scheme,
                                       const EvaluationGrid& grid);

}  // namespace smoothcop
