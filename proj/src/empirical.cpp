#include "smoothcop/empirical.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace smoothcop {

double empirical_copula(const RankMatrix& ranks, std::span<const double> u,
                        EmpiricalVariant variant) {
    const std::size_t n = ranks.rows(), d = ranks.dim();
    if (u.size() != d) throw std::domain_error("empirical_copula: dimension mismatch");
    for (double v : u)
        if (!(v >= 0.0 && v <= 1.0))
            throw std::domain_error("empirical_copula: coordinates must lie in [0, 1]");
    const double denom =
        variant == EmpiricalVariant::scaled_ranks ? double(n) : double(n + 1);
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        bool in = true;
        for (std::size_t j = 0; j < d; ++j) {
            if (!(double(ranks(i, j)) / denom <= u[j])) {
                in = false;
                break;
            }
        }
        count += in;
    }
    return double(count) / double(n);
}

double empirical_process_alpha(const Sample& sample, const CopulaModel& model,
                               std::span<const double> u) {
    const std::size_t n = sample.rows(), d = sample.dim();
    if (model.dim() != d) throw std::domain_error("empirical_process_alpha: model dimension mismatch");
    if (u.size() != d) throw std::domain_error("empirical_process_alpha: dimension mismatch");
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        bool in = true;
        for (std::size_t j = 0; j < d; ++j) {
            if (!(sample(i, j) <= u[j])) {
                in = false;
                break;
            }
        }
        count += in;
    }
    return std::sqrt(double(n)) * (double(count) / double(n) - model.cdf(u));
}

double marginal_process_alpha(const Sample& sample, std::size_t j, double v) {
    const std::size_t n = sample.rows();
    if (j >= sample.dim()) throw std::domain_error("marginal_process_alpha: margin out of range");
    if (!(v >= 0.0 && v <= 1.0))
        throw std::domain_error("marginal_process_alpha: coordinate must lie in [0, 1]");
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) count += sample(i, j) <= v;
    return std::sqrt(double(n)) * (double(count) / double(n) - v);
}

std::size_t EvaluationGrid::point_count() const {
    std::size_t total = 1;
    for (const auto& axis : axes) total *= axis.size();
    return total;
}

double EvaluationGrid::mesh() const {
    double widest = 0.0;
    for (const auto& axis : axes)
        for (std::size_t k = 0; k + 1 < axis.size(); ++k)
            widest = std::max(widest, axis[k + 1] - axis[k]);
    return widest;
}

EvaluationGrid EvaluationGrid::tensor(std::vector<std::vector<double>> axes,
                                      std::string desc) {
    if (axes.empty()) throw std::invalid_argument("EvaluationGrid: no axes");
    for (auto& axis : axes) {
        if (axis.empty()) throw std::invalid_argument("EvaluationGrid: empty axis");
        std::sort(axis.begin(), axis.end());
        axis.erase(std::unique(axis.begin(), axis.end()), axis.end());
        if (axis.front() < 0.0 || axis.back() > 1.0)
            throw std::invalid_argument("EvaluationGrid: coordinates must lie in [0, 1]");
    }
    EvaluationGrid grid;
    grid.axes = std::move(axes);
    grid.description = std::move(desc);
    return grid;
}

EvaluationGrid EvaluationGrid::corners(std::size_t d) {
    std::vector<std::vector<double>> axes(d, std::vector<double>{0.0, 1.0});
    return tensor(std::move(axes), "corners");
}

EvaluationGrid make_evaluation_grid(std::size_t n, std::size_t d, int resolution,
                                    const std::vector<std::int64_t>* degrees,
                                    std::size_t point_budget) {
    if (n == 0 || d == 0) throw std::invalid_argument("make_evaluation_grid: n, d must be positive");
    if (resolution < 2) throw std::invalid_argument("make_evaluation_grid: resolution must be >= 2");

    std::vector<double> base;
    base.reserve(resolution + 4);
    for (int k = 0; k < resolution; ++k)
        base.push_back(double(k) / double(resolution - 1));
    base.push_back(1.0 / double(2 * n));
    base.push_back(1.0 - 1.0 / double(2 * n));

    std::string note = "uniform" + std::to_string(resolution) + "+halfsteps";

    // Candidate additions per axis, admitted while the tensor fits the budget.
    auto tensor_size = [d](std::size_t per_axis) {
        std::size_t total = 1;
        for (std::size_t a = 0; a < d; ++a) {
            if (total > std::size_t(4'000'000'000) / std::max<std::size_t>(per_axis, 1))
                return std::size_t(4'000'000'000);
            total *= per_axis;
        }
        return total;
    };

    std::size_t per_axis = base.size() + n + 1;
    const bool with_lattice = tensor_size(per_axis) <= point_budget;
    if (with_lattice) {
        for (std::size_t i = 0; i <= n; ++i)
            base.push_back(double(i) / double(n));
        note += "+lattice";
    }

    std::vector<std::vector<double>> axes(d, base);
    if (degrees) {
        if (degrees->size() != d)
            throw std::invalid_argument("make_evaluation_grid: degree list dimension mismatch");
        bool added = false;
        for (std::size_t j = 0; j < d; ++j) {
            const std::int64_t m = (*degrees)[j];
            if (m < 1 || m > 1024) continue;
            if (tensor_size(base.size() + std::size_t(m) + 1) > point_budget) continue;
            for (std::int64_t s = 0; s <= m; ++s)
                axes[j].push_back(double(s) / double(m));
            added = true;
        }
        if (added) note += "+support";
    }

    auto grid = EvaluationGrid::tensor(std::move(axes), "");
    char mesh_buf[40];
    std::snprintf(mesh_buf, sizeof(mesh_buf), "%.3g", grid.mesh());
    grid.description = note + ";mesh=" + mesh_buf;
    return grid;
}

}  // namespace smoothcop
