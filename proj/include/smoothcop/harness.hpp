#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "smoothcop/copula.hpp"
#include "smoothcop/processes.hpp"
#include "smoothcop/smoothing.hpp"

namespace smoothcop {

struct ExperimentConfig {
    CopulaFamily family = CopulaFamily::clayton;
    double theta = 2.0;
    std::size_t d = 2;
    SmoothingScheme scheme;
    std::vector<std::size_t> n_list;
    int reps = 1;
    int grid_resolution = 101;
    std::uint64_t master_seed = 1;
    int workers = 0;  // 0 picks from hardware concurrency
    std::string out_prefix;

    void validate() const;
};

// Flat key = value lines; blank lines and lines starting with '#' are
// skipped; unknown keys are rejected. Keys: copula, theta, d, scheme.kind,
// scheme.m, scheme.gamma, scheme.rule, scheme.mc_draws, n_list (comma
// separated), reps, grid_resolution, master_seed, workers, out.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_file(const std::string& path);

CopulaModel make_model(const ExperimentConfig& cfg);

// Seed of replication (n, rep), derived so that any subset of sizes or
// replications reproduces identical draws.
std::uint64_t replication_seed(std::uint64_t master_seed, std::size_t n, int rep);

struct RepRow {
    std::size_t n = 0;
    int rep = 0;
    double sup_classic = 0.0;  // sup |empirical copula process - C~_n|
    double sup_smooth = 0.0;   // sup |smoothed process - C~_n|
    double bias_term = 0.0;
    double drift_term = 0.0;
    std::string scheme;
    double gamma = 0.0;
    std::uint64_t seed = 0;
};

struct NSummary {
    std::size_t n = 0;
    double median_smooth = 0.0, mean_smooth = 0.0, q90_smooth = 0.0, median_classic = 0.0;
};

struct SlopeFit {
    double slope = 0.0;
    double se = 0.0;
};

// OLS slope of log y on log x with its standard error (zero when the fit has
// no residual degrees of freedom). Throws std::domain_error on nonpositive
// inputs.
SlopeFit fit_loglog_slope(std::span<const double> x, std::span<const double> y);

struct RateReport {
    std::vector<RepRow> rows;       // sorted by (n, rep)
    std::vector<NSummary> summary;  // sorted by n
    SlopeFit smooth_fit, classic_fit;  // slope == NaN when fewer than 2 sizes
    std::string scheme;
    double gamma = 0.0;
    // Exponents of the three almost-sure remainder terms the measured slope
    // is compared against (log factors omitted): (3-4g)/6, -1/4, -g/5.
    std::array<double, 3> reference_exponents{};
};

RateReport run_experiment(const ExperimentConfig& cfg);

std::vector<NSummary> summarize(const std::vector<RepRow>& rows);

// Raw schema: n,rep,sup_classic,sup_smooth,bias_term,drift_term,scheme,gamma,seed.
void write_raw_csv(const RateReport& r, std::ostream& out);
std::vector<RepRow> read_raw_csv(std::istream& in);
// Summary schema: n,median_smooth,mean_smooth,q90_smooth,median_classic,slope,slope_se.
void write_summary_csv(const RateReport& r, std::ostream& out);
// Writes <prefix>_raw.csv and <prefix>_summary.csv (a trailing ".csv" on the
// prefix is stripped first).
void emit_report(const RateReport& r, const std::string& prefix);

// Small end-to-end run exercising the pipeline invariants: decomposition
// inequality, worker-count independence of the report bytes, engine/pointwise
// agreement and the variance bound. Prints one line per check.
bool selfcheck(std::ostream& out);

}  // namespace smoothcop
