#include "smoothcop/copula.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "smoothcop/rng.hpp"

namespace smoothcop {

namespace {

// log(exp(a) + exp(b)) tolerating -inf arguments.
double log_sum_exp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    const double m = a > b ? a : b;
    return m + std::log1p(std::exp(-std::fabs(a - b)));
}

double softplus(double x) {
    if (x > 35.0) return x + std::exp(-x);
    return std::log1p(std::exp(x));
}

}  // namespace

CopulaModel::CopulaModel(CopulaFamily f, double theta, std::size_t d)
    : family_(f), theta_(theta), d_(d) {}

CopulaModel CopulaModel::independence(std::size_t d) {
    if (d < 2) throw std::invalid_argument("CopulaModel: d must be >= 2");
    return CopulaModel(CopulaFamily::independence, 0.0, d);
}

CopulaModel CopulaModel::clayton(double theta, std::size_t d) {
    if (d < 2) throw std::invalid_argument("CopulaModel: d must be >= 2");
    if (!(theta > 0.0) || !std::isfinite(theta))
        throw std::invalid_argument("CopulaModel: clayton requires theta > 0");
    return CopulaModel(CopulaFamily::clayton, theta, d);
}

CopulaModel CopulaModel::gumbel(double theta) {
    if (!(theta >= 1.0) || !std::isfinite(theta))
        throw std::invalid_argument("CopulaModel: gumbel requires theta >= 1");
    return CopulaModel(CopulaFamily::gumbel, theta, 2);
}

CopulaModel CopulaModel::frank(double theta) {
    if (theta == 0.0 || !std::isfinite(theta))
        throw std::invalid_argument("CopulaModel: frank requires theta != 0");
    if (std::fabs(theta) > 500.0)
        throw std::invalid_argument("CopulaModel: frank supports |theta| <= 500");
    return CopulaModel(CopulaFamily::frank, theta, 2);
}

std::string CopulaModel::name() const {
    switch (family_) {
        case CopulaFamily::independence: return "independence";
        case CopulaFamily::clayton: return "clayton";
        case CopulaFamily::gumbel: return "gumbel";
        case CopulaFamily::frank: return "frank";
    }
    return "?";
}

void CopulaModel::check_point(std::span<const double> u) const {
    if (u.size() != d_) throw std::domain_error("CopulaModel: point dimension mismatch");
    for (double v : u)
        if (!(v >= 0.0 && v <= 1.0))
            throw std::domain_error("CopulaModel: coordinates must lie in [0, 1]");
}

double CopulaModel::cdf(std::span<const double> u) const {
    check_point(u);
    // Groundedness and the upper corner hold exactly for every family, and
    // downstream boundary identities require the exact 0.0 / 1.0 here.
    bool all_one = true;
    for (double v : u) {
        if (v == 0.0) return 0.0;
        if (v != 1.0) all_one = false;
    }
    if (all_one) return 1.0;
    switch (family_) {
        case CopulaFamily::independence: {
            double p = 1.0;
            for (double v : u) p *= v;
            return p;
        }
        case CopulaFamily::clayton: {
            // (sum u_j^-theta - d + 1)^(-1/theta), written with expm1/log1p so the
            // theta -> 0 independence limit is reached without cancellation.
            double s = 0.0;
            for (double v : u) {
                if (v == 0.0) return 0.0;
                s += std::expm1(-theta_ * std::log(v));
            }
            if (!std::isfinite(s)) return 0.0;
            return std::exp(-std::log1p(s) / theta_);
        }
        case CopulaFamily::gumbel: {
            if (u[0] == 0.0 || u[1] == 0.0) return 0.0;
            if (u[0] == 1.0 && u[1] == 1.0) return 1.0;
            const double x = -std::log(u[0]), y = -std::log(u[1]);
            const double lx = x > 0.0 ? theta_ * std::log(x)
                                      : -std::numeric_limits<double>::infinity();
            const double ly = y > 0.0 ? theta_ * std::log(y)
                                      : -std::numeric_limits<double>::infinity();
            const double a = std::exp(log_sum_exp(lx, ly) / theta_);
            return std::exp(-a);
        }
        case CopulaFamily::frank: {
            if (u[0] == 0.0 || u[1] == 0.0) return 0.0;
            if (theta_ > 0.0) {
                // t = ln(1-e^-bu) + ln(1-e^-bv) - ln(1-e^-b); C = -ln(-expm1(t))/b.
                const double b = theta_;
                const double t = std::log1p(-std::exp(-b * u[0])) +
                                 std::log1p(-std::exp(-b * u[1])) -
                                 std::log1p(-std::exp(-b));
                return -std::log(-std::expm1(t)) / b;
            }
            const double b = -theta_;
            const auto lg = [b](double t) { return b * t + std::log1p(-std::exp(-b * t)); };
            const double lr = lg(u[0]) + lg(u[1]) - lg(1.0);
            return softplus(lr) / b;
        }
    }
    return 0.0;
}

double CopulaModel::partial(std::size_t j, std::span<const double> u) const {
    check_point(u);
    if (j >= d_) throw std::domain_error("CopulaModel: margin index out of range");
    if (u[j] == 0.0 || u[j] == 1.0) return 0.0;  // boundary convention
    for (std::size_t l = 0; l < d_; ++l)
        if (l != j && u[l] == 0.0) return 0.0;  // cdf vanishes on this face
    switch (family_) {
        case CopulaFamily::independence: {
            double p = 1.0;
            for (std::size_t l = 0; l < d_; ++l)
                if (l != j) p *= u[l];
            return p;
        }
        case CopulaFamily::clayton: {
            double s = 0.0;
            for (double v : u) s += std::expm1(-theta_ * std::log(v));
            if (!std::isfinite(s)) return 0.0;
            const double e = -(theta_ + 1.0) * std::log(u[j]) -
                             (1.0 / theta_ + 1.0) * std::log1p(s);
            return std::exp(e);
        }
        case CopulaFamily::gumbel: {
            const double xj = -std::log(u[j]);
            const double xo = -std::log(u[1 - j]);
            const double lxj = theta_ * std::log(xj);
            const double lxo = xo > 0.0 ? theta_ * std::log(xo)
                                        : -std::numeric_limits<double>::infinity();
            const double lsum = log_sum_exp(lxj, lxo);
            const double a = std::exp(lsum / theta_);
            const double le = -a + (1.0 / theta_ - 1.0) * lsum +
                              (theta_ - 1.0) * std::log(xj) + xj;
            return std::exp(le);
        }
        case CopulaFamily::frank: {
            const double uj = u[j], v = u[1 - j];
            if (theta_ > 0.0) {
                const double gu = std::expm1(-theta_ * uj);
                const double gv = std::expm1(-theta_ * v);
                const double g1 = std::expm1(-theta_);
                return std::exp(-theta_ * uj) * gv / (g1 + gu * gv);
            }
            const double b = -theta_;
            const double inner = std::expm1(-b * uj) * std::expm1(-b * v) +
                                 std::exp(b * (1.0 - uj - v)) - std::exp(-b * (uj + v));
            return -std::expm1(-b * v) / inner;
        }
    }
    return 0.0;
}

Sample CopulaModel::sample(std::size_t n, std::uint64_t seed) const {
    if (n == 0) throw std::invalid_argument("CopulaModel: n must be positive");
    rng::Engine eng(seed);
    Sample out(n, d_);
    switch (family_) {
        case CopulaFamily::independence: {
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < d_; ++j) out(i, j) = eng.uniform01();
            break;
        }
        case CopulaFamily::clayton: {
            // Gamma frailty: U_j = (1 + E_j / V)^(-1/theta), V ~ Gamma(1/theta).
            for (std::size_t i = 0; i < n; ++i) {
                const double v = eng.gamma(1.0 / theta_);
                for (std::size_t j = 0; j < d_; ++j) {
                    const double e = eng.exponential();
                    out(i, j) = std::exp(-std::log1p(e / v) / theta_);
                }
            }
            break;
        }
        case CopulaFamily::gumbel:
        case CopulaFamily::frank: {
            for (std::size_t i = 0; i < n; ++i) {
                const double u1 = eng.uniform01();
                const double q = eng.uniform01();
                double lo = 0.0, hi = 1.0;
                while (hi - lo > 1e-12) {
                    const double mid = 0.5 * (lo + hi);
                    const double point[2] = {u1, mid};
                    if (partial(0, point) < q)
                        lo = mid;
                    else
                        hi = mid;
                }
                out(i, 0) = u1;
                out(i, 1) = 0.5 * (lo + hi);
            }
            break;
        }
    }
    return out;
}

CurvatureReport curvature_scan(const CopulaModel& model, const CurvatureGridSpec& grid) {
    if (grid.level_points.size() < 3)
        throw std::invalid_argument("curvature_scan: need at least 3 refinement levels");
    for (int p : grid.level_points)
        if (p < 2) throw std::invalid_argument("curvature_scan: degenerate grid level");
    const double h = grid.step;
    if (!(h > 0.0) || !(grid.lo - h > 0.0) || !(grid.hi + h < 1.0) || !(grid.lo < grid.hi))
        throw std::invalid_argument("curvature_scan: grid must be strictly inside (0,1)^d");

    const std::size_t d = model.dim();
    CurvatureReport report;
    report.grid_note = "uniform interior grid, " + std::to_string(grid.level_points.size()) +
                       " refinement levels";

    std::vector<double> point(d);
    auto second_diff = [&](std::size_t i, std::size_t j, const std::vector<double>& u,
                           double step) {
        point = u;
        if (i == j) {
            point[i] = u[i] + step;
            const double fp = model.cdf(point);
            point[i] = u[i] - step;
            const double fm = model.cdf(point);
            point[i] = u[i];
            return (fp - 2.0 * model.cdf(point) + fm) / (step * step);
        }
        point[i] = u[i] + step;
        point[j] = u[j] + step;
        const double fpp = model.cdf(point);
        point[j] = u[j] - step;
        const double fpm = model.cdf(point);
        point[i] = u[i] - step;
        const double fmm = model.cdf(point);
        point[j] = u[j] + step;
        const double fmp = model.cdf(point);
        return (fpp - fpm - fmp + fmm) / (4.0 * step * step);
    };

    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            CurvaturePairReport pair;
            pair.i = i;
            pair.j = j;
            for (std::size_t lev = 0; lev < grid.level_points.size(); ++lev) {
                const int per_axis = grid.level_points[lev];
                double level_max = 0.0;
                std::size_t flagged = 0;
                // Tensor walk over the d-dim grid at this refinement level.
                std::vector<int> idx(d, 0);
                std::vector<double> u(d);
                bool done = false;
                while (!done) {
                    for (std::size_t a = 0; a < d; ++a)
                        u[a] = grid.lo + (grid.hi - grid.lo) * idx[a] / (per_axis - 1);
                    const double weight =
                        std::min(u[i] * (1.0 - u[i]), u[j] * (1.0 - u[j]));
                    const double r1 = std::fabs(second_diff(i, j, u, h)) * weight;
                    const double r2 = std::fabs(second_diff(i, j, u, 0.5 * h)) * weight;
                    const double big = std::max(r1, r2);
                    if (big > 1e-6 && std::fabs(r1 - r2) > 0.1 * big) ++flagged;
                    if (r2 > level_max) level_max = r2;
                    for (std::size_t a = 0;; ++a) {
                        if (a == d) {
                            done = true;
                            break;
                        }
                        if (++idx[a] < per_axis) break;
                        idx[a] = 0;
                    }
                }
                pair.level_max_ratio.push_back(level_max);
                if (lev + 1 == grid.level_points.size()) {
                    pair.max_ratio = level_max;
                    pair.unstable_points = flagged;
                }
            }
            report.max_ratio = std::max(report.max_ratio, pair.max_ratio);
            report.unstable_points += pair.unstable_points;
            report.pairs.push_back(std::move(pair));
        }
    }
    report.unstable = report.unstable_points > 0;
    return report;
}

void CurvatureReport::write_csv(std::ostream& out) const {
    out << "pair_i,pair_j,level,max_ratio,unstable_points\n";
    char buf[40];
    for (const auto& pair : pairs) {
        for (std::size_t lev = 0; lev < pair.level_max_ratio.size(); ++lev) {
            std::snprintf(buf, sizeof(buf), "%.17g", pair.level_max_ratio[lev]);
            out << pair.i + 1 << ',' << pair.j + 1 << ',' << lev << ',' << buf << ',';
            out << (lev + 1 == pair.level_max_ratio.size() ? pair.unstable_points : 0) << '\n';
        }
    }
}

}  // namespace smoothcop
