#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "smoothcop/harness.hpp"

namespace sc = smoothcop;

namespace {

// Exit codes: 0 success, 1 usage or configuration error, 2 invariant
// violation (decomposition inequality, variance bound, selfcheck), 3 I/O.
constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kViolation = 2;
constexpr int kIo = 3;

struct SchemeFlags {
    std::string kind = "beta";
    std::int64_t m = 1;
    double gamma = 1.0;
    std::string rule = "iqr";
    std::int64_t mc_draws = 200;

    void attach(CLI::App* cmd) {
        cmd->add_option("--scheme", kind,
                        "smoothing scheme: beta, bernstein_fixed, bernstein_rate, adaptive")
            ->capture_default_str();
        cmd->add_option("--m", m, "degree for bernstein_fixed")->capture_default_str();
        cmd->add_option("--gamma", gamma, "degree exponent in [1, 2) for rate/adaptive schemes")
            ->capture_default_str();
        cmd->add_option("--adaptive-rule", rule, "adaptive degree rule: iqr or floor")
            ->capture_default_str();
        cmd->add_option("--mc-draws", mc_draws, "Monte Carlo draws per evaluation")
            ->capture_default_str();
    }

    sc::SmoothingScheme build() const {
        sc::MonteCarloSpec mc;
        mc.draws = mc_draws;
        if (kind == "beta" || kind == "beta_copula") return sc::SmoothingScheme::beta_copula(mc);
        if (kind == "bernstein_fixed") return sc::SmoothingScheme::bernstein_fixed(m, mc);
        if (kind == "bernstein_rate") return sc::SmoothingScheme::bernstein_rate(gamma, mc);
        if (kind == "adaptive") {
            sc::AdaptiveRule r;
            if (rule == "iqr")
                r = sc::AdaptiveRule::iqr;
            else if (rule == "floor")
                r = sc::AdaptiveRule::floor_only;
            else
                throw std::invalid_argument("unknown adaptive rule: " + rule);
            return sc::SmoothingScheme::adaptive(gamma, r, mc);
        }
        throw std::invalid_argument("unknown scheme: " + kind);
    }
};

struct ModelFlags {
    std::string family = "clayton";
    double theta = 2.0;
    std::size_t d = 2;

    void attach(CLI::App* cmd) {
        cmd->add_option("--copula", family,
                        "copula family: independence, clayton, gumbel, frank")
            ->capture_default_str();
        cmd->add_option("--theta", theta, "copula parameter")->capture_default_str();
        cmd->add_option("--d", d, "dimension (independence/clayton)")->capture_default_str();
    }

    sc::CopulaModel build() const {
        if (family == "independence") return sc::CopulaModel::independence(d);
        if (family == "clayton") return sc::CopulaModel::clayton(theta, d);
        if (family == "gumbel") {
            if (d != 2) throw std::invalid_argument("gumbel requires --d 2");
            return sc::CopulaModel::gumbel(theta);
        }
        if (family == "frank") {
            if (d != 2) throw std::invalid_argument("frank requires --d 2");
            return sc::CopulaModel::frank(theta);
        }
        throw std::invalid_argument("unknown copula family: " + family);
    }
};

void print_value(const char* label, double v) {
    std::printf("%-18s %.17g\n", label, v);
}

int cmd_eval(const std::string& data_path, const std::vector<double>& u, bool with_model,
             const ModelFlags& mf, const SchemeFlags& sf) {
    const sc::Sample sample = sc::Sample::read_csv(data_path);
    if (u.size() != sample.dim())
        throw std::invalid_argument("--u needs one coordinate per sample column");
    const sc::RankMatrix ranks = sc::compute_ranks(sample);

    std::printf("n = %zu, d = %zu\n", sample.rows(), sample.dim());
    print_value("empirical", sc::empirical_copula(ranks, u));
    print_value("deheuvels", sc::empirical_copula(ranks, u, sc::EmpiricalVariant::deheuvels));

    const sc::ResolvedSmoothing rs = sc::resolve(sf.build(), sample);
    print_value("smooth", sc::smooth_copula_closed(ranks, rs, u));
    const sc::McEstimate mc = sc::smooth_copula_mc(ranks, rs, u);
    print_value("smooth_mc", mc.estimate);
    print_value("smooth_mc_se", mc.stderr_est);

    if (with_model) {
        const sc::CopulaModel model = mf.build();
        if (model.dim() != sample.dim())
            throw std::invalid_argument("model dimension does not match the sample");
        print_value("model_cdf", model.cdf(u));
        print_value("tilde", sc::tilde_process(sample, model, u));
        print_value("empirical_proc", sc::empirical_copula_process(ranks, model, u));
        print_value("smooth_proc", sc::smooth_copula_process(ranks, rs, model, u));
    }
    return kOk;
}

struct RateFlags {
    ModelFlags model;
    SchemeFlags scheme;
    std::vector<std::size_t> n_list;
    int reps = 1;
    int grid = 101;
    std::uint64_t seed = 1;
    int workers = 0;

    sc::ExperimentConfig build() const {
        sc::ExperimentConfig cfg;
        if (model.family == "independence")
            cfg.family = sc::CopulaFamily::independence;
        else if (model.family == "clayton")
            cfg.family = sc::CopulaFamily::clayton;
        else if (model.family == "gumbel")
            cfg.family = sc::CopulaFamily::gumbel;
        else if (model.family == "frank")
            cfg.family = sc::CopulaFamily::frank;
        else
            throw std::invalid_argument("unknown copula family: " + model.family);
        cfg.theta = model.theta;
        cfg.d = model.d;
        cfg.scheme = scheme.build();
        cfg.n_list = n_list;
        cfg.reps = reps;
        cfg.grid_resolution = grid;
        cfg.master_seed = seed;
        cfg.workers = workers;
        return cfg;
    }
};

int cmd_rate(const std::string& config_path, const RateFlags& flags, std::string out_override) {
    sc::ExperimentConfig cfg =
        config_path.empty() ? flags.build() : sc::parse_config_file(config_path);
    if (!out_override.empty()) cfg.out_prefix = std::move(out_override);
    if (cfg.out_prefix.empty()) cfg.out_prefix = "rate_report";

    const sc::RateReport report = sc::run_experiment(cfg);
    sc::emit_report(report, cfg.out_prefix);

    std::printf("scheme = %s, gamma = %.17g\n", report.scheme.c_str(), report.gamma);
    std::printf("%8s %14s %14s %14s %14s\n", "n", "median_smooth", "mean_smooth", "q90_smooth",
                "median_classic");
    for (const sc::NSummary& s : report.summary)
        std::printf("%8zu %14.6g %14.6g %14.6g %14.6g\n", s.n, s.median_smooth, s.mean_smooth,
                    s.q90_smooth, s.median_classic);
    std::printf("smooth slope  = %.6g (se %.6g)\n", report.smooth_fit.slope,
                report.smooth_fit.se);
    std::printf("classic slope = %.6g (se %.6g)\n", report.classic_fit.slope,
                report.classic_fit.se);
    std::printf("reference exponents: %.6g %.6g %.6g (log factors omitted)\n",
                report.reference_exponents[0], report.reference_exponents[1],
                report.reference_exponents[2]);
    std::printf("report written to %s_raw.csv / %s_summary.csv\n", cfg.out_prefix.c_str(),
                cfg.out_prefix.c_str());
    return kOk;
}

int cmd_variance(const SchemeFlags& sf, std::size_t n, std::size_t d, int grid_points,
                 std::int64_t draws, std::uint64_t seed, double gamma_bound,
                 bool have_gamma_bound, const std::string& out_path) {
    const sc::ResolvedSmoothing rs = sc::resolve(sf.build(), n, d);
    std::vector<double> grid;
    for (int k = 1; k <= grid_points; ++k)
        grid.push_back(double(k) / double(grid_points + 1));
    std::optional<double> gb;
    if (have_gamma_bound) gb = gamma_bound;
    const sc::VarianceAuditReport rep = sc::variance_audit(rs, n, grid, draws, seed, gb);

    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw sc::io_error("cannot open for writing: " + out_path);
        rep.write_csv(out);
    } else {
        rep.write_csv(std::cout);
    }
    std::fprintf(stderr, "variance audit: gamma = %.17g, draws = %lld, violations = %zu\n",
                 rep.gamma, static_cast<long long>(rep.draws), rep.violations);
    return rep.violations == 0 ? kOk : kViolation;
}

int cmd_condition2(const ModelFlags& mf, const std::string& out_path) {
    const sc::CopulaModel model = mf.build();
    const sc::CurvatureReport rep = sc::curvature_scan(model);
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw sc::io_error("cannot open for writing: " + out_path);
        rep.write_csv(out);
    } else {
        rep.write_csv(std::cout);
    }
    std::fprintf(stderr,
                 "curvature scan (%s): max u(1-u)-weighted second derivative = %.6g, "
                 "unstable points = %zu%s\n",
                 model.name().c_str(), rep.max_ratio, rep.unstable_points,
                 rep.unstable ? " [estimates did not stabilize under step halving]" : "");
    return kOk;  // diagnostic only
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"smoothed empirical copula estimators and rate experiments"};
    app.require_subcommand(1);

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate the estimators at one point");
    std::string data_path;
    std::vector<double> u;
    ModelFlags eval_model;
    SchemeFlags eval_scheme;
    eval->add_option("--data", data_path, "CSV sample (header u1,...,ud)")->required();
    eval->add_option("--u", u, "evaluation point coordinates")->required()->expected(-2);
    auto* with_model = eval->add_flag("--with-model", "also evaluate model-based processes");
    eval_model.attach(eval);
    eval_scheme.attach(eval);

    // rate-experiment
    auto* rate = app.add_subcommand("rate-experiment", "run the replication experiment");
    std::string config_path, rate_out;
    RateFlags rate_flags;
    rate->add_option("--config", config_path,
                     "flat key = value configuration file (overrides the flags below)");
    rate->add_option("--out", rate_out, "output prefix override");
    rate_flags.model.attach(rate);
    rate_flags.scheme.attach(rate);
    auto* rate_n = rate->add_option("--n", rate_flags.n_list, "sample sizes");
    rate->add_option("--reps", rate_flags.reps, "replications per size")->capture_default_str();
    rate->add_option("--grid", rate_flags.grid, "uniform grid resolution per axis")
        ->capture_default_str();
    rate->add_option("--seed", rate_flags.seed, "master seed")->capture_default_str();
    rate->add_option("--workers", rate_flags.workers, "worker threads (0: auto)")
        ->capture_default_str();

    // variance-audit
    auto* var = app.add_subcommand("variance-audit",
                                   "check smoothing margins against the variance bound");
    SchemeFlags var_scheme;
    std::size_t var_n = 256, var_d = 2;
    int var_grid = 19;
    std::int64_t var_draws = 5000;
    std::uint64_t var_seed = 1;
    double var_gamma_bound = 1.0;
    var_scheme.attach(var);
    var->add_option("--n", var_n, "sample size")->capture_default_str();
    var->add_option("--d", var_d, "dimension")->capture_default_str();
    var->add_option("--grid", var_grid, "number of interior u points")->capture_default_str();
    var->add_option("--draws", var_draws, "Monte Carlo draws per point (>= 1000)")
        ->capture_default_str();
    var->add_option("--seed", var_seed, "audit seed")->capture_default_str();
    auto* gb_opt = var->add_option("--gamma-bound", var_gamma_bound,
                                   "exponent for the u(1-u)/n^gamma bound (default: scheme gamma)");
    std::string var_out;
    var->add_option("--out", var_out, "CSV output path (default: stdout)");

    // condition2-scan
    auto* cond = app.add_subcommand("condition2-scan",
                                    "weighted second-derivative curvature diagnostic");
    ModelFlags cond_model;
    cond_model.attach(cond);
    std::string cond_out;
    cond->add_option("--out", cond_out, "CSV output path (default: stdout)");

    // selfcheck
    auto* self = app.add_subcommand("selfcheck", "run the built-in pipeline checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (eval->parsed())
            return cmd_eval(data_path, u, with_model->count() > 0, eval_model, eval_scheme);
        if (rate->parsed()) {
            if (config_path.empty() && rate_n->count() == 0)
                throw std::invalid_argument("rate-experiment needs --config or --n");
            return cmd_rate(config_path, rate_flags, rate_out);
        }
        if (var->parsed())
            return cmd_variance(var_scheme, var_n, var_d, var_grid, var_draws, var_seed,
                                var_gamma_bound, gb_opt->count() > 0, var_out);
        if (cond->parsed()) return cmd_condition2(cond_model, cond_out);
        if (self->parsed()) return sc::selfcheck(std::cout) ? kOk : kViolation;
    } catch (const sc::inequality_violation& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kViolation;
    } catch (const sc::io_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kIo;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    }
    return kUsage;
}
