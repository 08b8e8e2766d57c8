#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "smoothcop/sample.hpp"

namespace smoothcop {

enum class CopulaFamily { independence, clayton, gumbel, frank };

// Reference copula families with closed-form cdf and first partial
// derivatives, plus exact samplers. Clayton and independence support any
// d >= 2; gumbel and frank are bivariate.
class CopulaModel {
  public:
    static CopulaModel independence(std::size_t d);
    static CopulaModel clayton(double theta, std::size_t d);  // theta > 0
    static CopulaModel gumbel(double theta);                  // theta >= 1, d = 2
    static CopulaModel frank(double theta);                   // theta != 0, d = 2

    CopulaFamily family() const { return family_; }
    double theta() const { return theta_; }
    std::size_t dim() const { return d_; }
    std::string name() const;

    // C(u) for u in [0, 1]^d.
    double cdf(std::span<const double> u) const;

    // dC/du_j (0-based j), defined as 0 when u_j is 0 or 1. Always in [0, 1].
    double partial(std::size_t j, std::span<const double> u) const;

    // n iid rows from the copula; deterministic given seed.
    // Clayton uses the Gamma frailty construction; gumbel/frank invert the
    // conditional distribution v -> dC/du1(u1, v) by bisection to 1e-12.
    Sample sample(std::size_t n, std::uint64_t seed) const;

  private:
    CopulaModel(CopulaFamily f, double theta, std::size_t d);
    void check_point(std::span<const double> u) const;

    CopulaFamily family_;
    double theta_;
    std::size_t d_;
};

// Finite-difference probe of the mixed second partials. For each margin pair
// (i, j) and interior grid point u it forms the central second difference of
// the cdf and the product |d2C/du_i du_j| * min{u_i(1-u_i), u_j(1-u_j)},
// whose sup is finite for copulas with bounded second-derivative growth.
// Diagnostic only; never a hard pass/fail.
struct CurvatureGridSpec {
    double lo = 0.01;
    double hi = 0.99;
    std::vector<int> level_points = {11, 21, 41};  // per-axis, >= 3 levels
    double step = 1e-4;                            // base step; halved for the agreement check
};

struct CurvaturePairReport {
    std::size_t i = 0, j = 0;
    std::vector<double> level_max_ratio;  // one entry per refinement level
    double max_ratio = 0.0;               // finest level
    std::size_t unstable_points = 0;      // step-halving disagreement > 10%
};

struct CurvatureReport {
    std::vector<CurvaturePairReport> pairs;
    double max_ratio = 0.0;
    std::size_t unstable_points = 0;
    bool unstable = false;
    std::string grid_note;

    void write_csv(std::ostream& out) const;
};

CurvatureReport curvature_scan(const CopulaModel& model, const CurvatureGridSpec& grid = {});

}  // namespace smoothcop
