#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "smoothcop/copula.hpp"
#include "smoothcop/sample.hpp"

namespace smoothcop {

// scaled_ranks: indicator R_ij / n <= u_j (the estimator driving everything
// downstream). deheuvels: indicator R_ij / (n+1) <= u_j; uniformly within
// d/n of the first.
enum class EmpiricalVariant { scaled_ranks, deheuvels };

double empirical_copula(const RankMatrix& ranks, std::span<const double> u,
                        EmpiricalVariant variant = EmpiricalVariant::scaled_ranks);

// alpha_n(u) = sqrt(n) (G_n(u) - C(u)) with G_n the empirical df of the
// sample itself (values, not ranks).
double empirical_process_alpha(const Sample& sample, const CopulaModel& model,
                               std::span<const double> u);

// alpha_{n,j}(v) = sqrt(n) (G_{n,j}(v) - v) for margin j (0-based).
double marginal_process_alpha(const Sample& sample, std::size_t j, double v);

// Tensor grid on which sup norms are approximated. Each axis holds a sorted,
// deduplicated coordinate list that always contains 0 and 1, so the corner
// (1,...,1) and every boundary face are represented.
struct EvaluationGrid {
    std::vector<std::vector<double>> axes;
    std::string description;

    std::size_t dim() const { return axes.size(); }
    std::size_t point_count() const;
    double mesh() const;  // largest within-axis gap

    static EvaluationGrid tensor(std::vector<std::vector<double>> axes, std::string desc);
    static EvaluationGrid corners(std::size_t d);
};

// Default sup-norm grid: uniform coordinates (resolution per axis, endpoints
// included) plus the boundary-adjacent pair {1/(2n), 1 - 1/(2n)}. The data
// lattice {i/n} is unioned in whenever the resulting tensor stays within
// point_budget, since the empirical copula jumps exactly there. Optional
// per-axis smoothing support {s/m_j} is unioned for degrees <= 1024 under the
// same budget, which keeps the decomposition inequality exact on enumeration
// paths. The description records what was included.
EvaluationGrid make_evaluation_grid(std::size_t n, std::size_t d, int resolution,
                                    const std::vector<std::int64_t>* degrees = nullptr,
                                    std::size_t point_budget = 1'000'000);

}  // namespace smoothcop
