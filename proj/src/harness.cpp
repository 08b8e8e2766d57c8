#include "smoothcop/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "smoothcop/empirical.hpp"
#include "smoothcop/rng.hpp"
#include "smoothcop/sample.hpp"

namespace smoothcop {

namespace {

constexpr std::uint64_t kMcStreamTag = 0x4D43u;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad numeric value for " + key + ": " + v);
    }
}

long long parse_int(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad integer value for " + key + ": " + v);
    }
}

double median_of_sorted(const std::vector<double>& v) {
    const std::size_t k = v.size();
    return k % 2 == 1 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

// Empirical 90th percentile: the ceil(0.9 k)-th order statistic.
double q90_of_sorted(const std::vector<double>& v) {
    const std::size_t k = v.size();
    std::size_t idx = std::size_t(std::ceil(0.9 * double(k)));
    if (idx == 0) idx = 1;
    return v[std::min(idx, k) - 1];
}

void append_double(std::string& line, double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    line += buf;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (n_list.empty()) throw std::invalid_argument("config: n_list must not be empty");
    for (std::size_t n : n_list)
        if (n < 2) throw std::invalid_argument("config: every n must be >= 2");
    for (std::size_t i = 1; i < n_list.size(); ++i)
        if (!(n_list[i - 1] < n_list[i]))
            throw std::invalid_argument("config: n_list must be strictly increasing");
    if (reps < 1) throw std::invalid_argument("config: reps must be >= 1");
    if (grid_resolution < 2) throw std::invalid_argument("config: grid_resolution must be >= 2");
    if (d < 2) throw std::invalid_argument("config: d must be >= 2");
    if (workers < 0) throw std::invalid_argument("config: workers must be >= 0");
    scheme.mc.validate();
    make_model(*this);  // family/theta/d compatibility
}

ExperimentConfig parse_config(std::istream& in) {
    std::string family = "clayton", scheme = "";
    double theta = 2.0, gamma = -1.0;
    long long m = -1;
    std::string rule = "iqr";
    MonteCarloSpec mc;
    ExperimentConfig cfg;
    bool have_n = false, have_reps = false;

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        " is not key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string val = trim(t.substr(eq + 1));
        if (key.empty() || val.empty())
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        " has an empty key or value");

        if (key == "copula") {
            family = val;
        } else if (key == "theta") {
            theta = parse_double(val, key);
        } else if (key == "d") {
            const long long x = parse_int(val, key);
            if (x < 2) throw std::invalid_argument("config: d must be >= 2");
            cfg.d = std::size_t(x);
        } else if (key == "scheme.kind") {
            scheme = val;
        } else if (key == "scheme.m") {
            m = parse_int(val, key);
        } else if (key == "scheme.gamma") {
            gamma = parse_double(val, key);
        } else if (key == "scheme.rule") {
            rule = val;
        } else if (key == "scheme.mc_draws") {
            mc.draws = parse_int(val, key);
        } else if (key == "n_list") {
            cfg.n_list.clear();
            for (const std::string& part : split(val, ',')) {
                const long long x = parse_int(trim(part), key);
                if (x < 2) throw std::invalid_argument("config: every n must be >= 2");
                cfg.n_list.push_back(std::size_t(x));
            }
            have_n = true;
        } else if (key == "reps") {
            cfg.reps = int(parse_int(val, key));
            have_reps = true;
        } else if (key == "grid_resolution") {
            cfg.grid_resolution = int(parse_int(val, key));
        } else if (key == "master_seed") {
            cfg.master_seed = std::uint64_t(parse_int(val, key));
        } else if (key == "workers") {
            cfg.workers = int(parse_int(val, key));
        } else if (key == "out") {
            cfg.out_prefix = val;
        } else {
            throw std::invalid_argument("config: unknown key: " + key);
        }
    }

    if (scheme.empty()) throw std::invalid_argument("config: scheme.kind is required");
    if (!have_n) throw std::invalid_argument("config: n_list is required");
    if (!have_reps) throw std::invalid_argument("config: reps is required");

    if (family == "independence")
        cfg.family = CopulaFamily::independence;
    else if (family == "clayton")
        cfg.family = CopulaFamily::clayton;
    else if (family == "gumbel")
        cfg.family = CopulaFamily::gumbel;
    else if (family == "frank")
        cfg.family = CopulaFamily::frank;
    else
        throw std::invalid_argument("config: unknown copula family: " + family);
    cfg.theta = theta;

    AdaptiveRule arule;
    if (rule == "iqr")
        arule = AdaptiveRule::iqr;
    else if (rule == "floor")
        arule = AdaptiveRule::floor_only;
    else
        throw std::invalid_argument("config: unknown adaptive_rule: " + rule);

    if (scheme == "beta" || scheme == "beta_copula") {
        cfg.scheme = SmoothingScheme::beta_copula(mc);
    } else if (scheme == "bernstein_fixed") {
        if (m < 1) throw std::invalid_argument("config: bernstein_fixed requires m >= 1");
        cfg.scheme = SmoothingScheme::bernstein_fixed(m, mc);
    } else if (scheme == "bernstein_rate") {
        if (gamma < 0.0) throw std::invalid_argument("config: bernstein_rate requires gamma");
        cfg.scheme = SmoothingScheme::bernstein_rate(gamma, mc);
    } else if (scheme == "adaptive") {
        if (gamma < 0.0) throw std::invalid_argument("config: adaptive requires gamma");
        cfg.scheme = SmoothingScheme::adaptive(gamma, arule, mc);
    } else {
        throw std::invalid_argument("config: unknown scheme: " + scheme);
    }

    cfg.validate();
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config file: " + path);
    return parse_config(in);
}

CopulaModel make_model(const ExperimentConfig& cfg) {
    switch (cfg.family) {
        case CopulaFamily::independence: return CopulaModel::independence(cfg.d);
        case CopulaFamily::clayton: return CopulaModel::clayton(cfg.theta, cfg.d);
        case CopulaFamily::gumbel:
            if (cfg.d != 2) throw std::invalid_argument("config: gumbel requires d = 2");
            return CopulaModel::gumbel(cfg.theta);
        case CopulaFamily::frank:
            if (cfg.d != 2) throw std::invalid_argument("config: frank requires d = 2");
            return CopulaModel::frank(cfg.theta);
    }
    throw std::invalid_argument("config: unknown copula family");
}

std::uint64_t replication_seed(std::uint64_t master_seed, std::size_t n, int rep) {
    return rng::derive_seed({master_seed, std::uint64_t(n), std::uint64_t(rep)});
}

SlopeFit fit_loglog_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_loglog_slope: need two or more points");
    const std::size_t k = x.size();
    std::vector<double> lx(k), ly(k);
    for (std::size_t i = 0; i < k; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0))
            throw std::domain_error("fit_loglog_slope: inputs must be positive");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= double(k);
    my /= double(k);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx == 0.0) throw std::domain_error("fit_loglog_slope: x values are all equal");
    SlopeFit f;
    f.slope = sxy / sxx;
    if (k > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double r = ly[i] - my - f.slope * (lx[i] - mx);
            rss += r * r;
        }
        f.se = std::sqrt(std::max(0.0, rss / double(k - 2) / sxx));
    }
    return f;
}

std::vector<NSummary> summarize(const std::vector<RepRow>& rows) {
    if (rows.empty()) throw std::invalid_argument("summarize: no rows");
    std::vector<RepRow> sorted = rows;
    std::stable_sort(sorted.begin(), sorted.end(), [](const RepRow& a, const RepRow& b) {
        return a.n != b.n ? a.n < b.n : a.rep < b.rep;
    });
    std::vector<NSummary> out;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        std::vector<double> sm, cl;
        double mean = 0.0;
        while (j < sorted.size() && sorted[j].n == sorted[i].n) {
            sm.push_back(sorted[j].sup_smooth);
            cl.push_back(sorted[j].sup_classic);
            mean += sorted[j].sup_smooth;
            ++j;
        }
        std::sort(sm.begin(), sm.end());
        std::sort(cl.begin(), cl.end());
        NSummary s;
        s.n = sorted[i].n;
        s.median_smooth = median_of_sorted(sm);
        s.mean_smooth = mean / double(sm.size());
        s.q90_smooth = q90_of_sorted(sm);
        s.median_classic = median_of_sorted(cl);
        out.push_back(s);
        i = j;
    }
    return out;
}

RateReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::size_t tasks = cfg.n_list.size() * std::size_t(cfg.reps);
    RateReport report;
    report.rows.resize(tasks);
    report.scheme = cfg.scheme.kind_name();
    report.gamma = cfg.scheme.gamma;
    const double g = cfg.scheme.gamma;
    report.reference_exponents = {(3.0 - 4.0 * g) / 6.0, -0.25, -g / 5.0};

    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    const unsigned nworkers =
        cfg.workers > 0 ? unsigned(cfg.workers) : std::min(hw, 8u);

    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex err_mu;

    auto work = [&]() {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= tasks || failed.load()) return;
            try {
                const std::size_t n = cfg.n_list[k / std::size_t(cfg.reps)];
                const int rep = int(k % std::size_t(cfg.reps));
                const std::uint64_t seed = replication_seed(cfg.master_seed, n, rep);
                const CopulaModel model = make_model(cfg);
                const Sample sample = model.sample(n, seed);
                SmoothingScheme sch = cfg.scheme;
                sch.mc.seed = rng::derive_seed({seed, kMcStreamTag});
                const ResolvedSmoothing rs = resolve(sch, sample);
                const EvaluationGrid grid =
                    make_evaluation_grid(n, cfg.d, cfg.grid_resolution, &rs.degrees);
                const DecompositionTerms t = decomposition_terms(sample, model, rs, grid);
                RepRow& row = report.rows[k];
                row.n = n;
                row.rep = rep;
                row.sup_classic = t.classic_term;
                row.sup_smooth = t.lhs;
                row.bias_term = t.bias_term;
                row.drift_term = t.smooth_drift_term;
                row.scheme = sch.kind_name();
                row.gamma = rs.gamma;
                row.seed = seed;
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!first_error) first_error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };

    if (nworkers <= 1 || tasks == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(nworkers);
        for (unsigned i = 0; i < nworkers; ++i) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    std::stable_sort(report.rows.begin(), report.rows.end(),
                     [](const RepRow& a, const RepRow& b) {
                         return a.n != b.n ? a.n < b.n : a.rep < b.rep;
                     });
    report.summary = summarize(report.rows);

    if (report.summary.size() >= 2) {
        std::vector<double> xs, ysm, ycl;
        for (const NSummary& s : report.summary) {
            xs.push_back(double(s.n));
            ysm.push_back(s.median_smooth);
            ycl.push_back(s.median_classic);
        }
        report.smooth_fit = fit_loglog_slope(xs, ysm);
        report.classic_fit = fit_loglog_slope(xs, ycl);
    } else {
        report.smooth_fit = {std::numeric_limits<double>::quiet_NaN(), 0.0};
        report.classic_fit = {std::numeric_limits<double>::quiet_NaN(), 0.0};
    }
    return report;
}

void write_raw_csv(const RateReport& r, std::ostream& out) {
    out << "n,rep,sup_classic,sup_smooth,bias_term,drift_term,scheme,gamma,seed\n";
    for (const RepRow& row : r.rows) {
        std::string line = std::to_string(row.n) + "," + std::to_string(row.rep) + ",";
        append_double(line, row.sup_classic);
        line += ",";
        append_double(line, row.sup_smooth);
        line += ",";
        append_double(line, row.bias_term);
        line += ",";
        append_double(line, row.drift_term);
        line += "," + row.scheme + ",";
        append_double(line, row.gamma);
        line += "," + std::to_string(row.seed) + "\n";
        out << line;
    }
}

std::vector<RepRow> read_raw_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line))
        throw io_error("raw csv: missing header");
    if (trim(line) != "n,rep,sup_classic,sup_smooth,bias_term,drift_term,scheme,gamma,seed")
        throw io_error("raw csv: unexpected header: " + line);
    std::vector<RepRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto f = split(trim(line), ',');
        if (f.size() != 9)
            throw io_error("raw csv: line " + std::to_string(lineno) + " has " +
                           std::to_string(f.size()) + " fields, expected 9");
        try {
            RepRow r;
            r.n = std::size_t(std::stoull(f[0]));
            r.rep = std::stoi(f[1]);
            r.sup_classic = std::stod(f[2]);
            r.sup_smooth = std::stod(f[3]);
            r.bias_term = std::stod(f[4]);
            r.drift_term = std::stod(f[5]);
            r.scheme = f[6];
            r.gamma = std::stod(f[7]);
            r.seed = std::stoull(f[8]);
            rows.push_back(std::move(r));
        } catch (const std::exception&) {
            throw io_error("raw csv: malformed line " + std::to_string(lineno));
        }
    }
    return rows;
}

void write_summary_csv(const RateReport& r, std::ostream& out) {
    out << "n,median_smooth,mean_smooth,q90_smooth,median_classic,slope,slope_se\n";
    for (const NSummary& s : r.summary) {
        std::string line = std::to_string(s.n) + ",";
        append_double(line, s.median_smooth);
        line += ",";
        append_double(line, s.mean_smooth);
        line += ",";
        append_double(line, s.q90_smooth);
        line += ",";
        append_double(line, s.median_classic);
        line += ",";
        append_double(line, r.smooth_fit.slope);
        line += ",";
        append_double(line, r.smooth_fit.se);
        line += "\n";
        out << line;
    }
}

void emit_report(const RateReport& r, const std::string& prefix) {
    std::string base = prefix;
    if (base.size() > 4 && base.substr(base.size() - 4) == ".csv")
        base = base.substr(0, base.size() - 4);
    const std::string raw_path = base + "_raw.csv";
    const std::string sum_path = base + "_summary.csv";
    std::ofstream raw(raw_path);
    if (!raw) throw io_error("cannot open for writing: " + raw_path);
    write_raw_csv(r, raw);
    if (!raw) throw io_error("write failed: " + raw_path);
    std::ofstream sum(sum_path);
    if (!sum) throw io_error("cannot open for writing: " + sum_path);
    write_summary_csv(r, sum);
    if (!sum) throw io_error("write failed: " + sum_path);
}

bool selfcheck(std::ostream& out) {
    try {
        ExperimentConfig cfg;
        cfg.family = CopulaFamily::clayton;
        cfg.theta = 2.0;
        cfg.d = 2;
        cfg.scheme = SmoothingScheme::beta_copula();
        cfg.n_list = {48, 96};
        cfg.reps = 2;
        cfg.grid_resolution = 33;
        cfg.master_seed = 7;
        cfg.workers = 2;

        RateReport rep = run_experiment(cfg);
        if (rep.rows.size() != 4) throw std::runtime_error("unexpected row count");
        for (const RepRow& r : rep.rows)
            if (!std::isfinite(r.sup_classic) || !std::isfinite(r.sup_smooth) ||
                !std::isfinite(r.bias_term) || !std::isfinite(r.drift_term))
                throw std::runtime_error("non-finite statistic in report");
        out << "selfcheck: decomposition inequality held on 4 replications\n";

        std::ostringstream csv2;
        write_raw_csv(rep, csv2);
        cfg.workers = 1;
        RateReport rep1 = run_experiment(cfg);
        std::ostringstream csv1;
        write_raw_csv(rep1, csv1);
        if (csv1.str() != csv2.str())
            throw std::runtime_error("report depends on worker count");
        out << "selfcheck: report bytes independent of worker count\n";

        // Engine sup against direct pointwise evaluation on a coarse grid.
        const CopulaModel model = make_model(cfg);
        const Sample sample = model.sample(48, replication_seed(cfg.master_seed, 48, 0));
        const RankMatrix ranks = compute_ranks(sample);
        const EvaluationGrid grid = make_evaluation_grid(48, 2, 17);
        double brute = 0.0;
        for (double a : grid.axes[0])
            for (double b : grid.axes[1]) {
                const std::vector<double> u{a, b};
                brute = std::max(brute, std::abs(empirical_copula_process(ranks, model, u) -
                                                 tilde_process(sample, model, u)));
            }
        const double fast = stute_remainder_classic(sample, model, grid);
        if (std::abs(fast - brute) > 1e-10)
            throw std::runtime_error("grid engine disagrees with pointwise evaluation");
        out << "selfcheck: grid engine matches pointwise evaluation\n";

        // Closed form against direct enumeration over the product binomial
        // support; the pmf walk and the continued-fraction tails are
        // independent numeric paths.
        const ResolvedSmoothing enum_rs{SmoothingKind::bernstein_fixed,
                                        {3, 4},
                                        std::numeric_limits<double>::quiet_NaN(),
                                        MonteCarloSpec{}};
        for (const std::vector<double>& u :
             {std::vector<double>{0.3, 0.7}, std::vector<double>{0.55, 0.2}}) {
            const detail::PmfWindow w1 = detail::binom_pmf_window(3, u[0]);
            const detail::PmfWindow w2 = detail::binom_pmf_window(4, u[1]);
            double total = 0.0;
            for (std::size_t s1 = 0; s1 < w1.pmf.size(); ++s1)
                for (std::size_t s2 = 0; s2 < w2.pmf.size(); ++s2) {
                    const std::vector<double> pt{double(std::int64_t(s1) + w1.klo) / 3.0,
                                                 double(std::int64_t(s2) + w2.klo) / 4.0};
                    total += w1.pmf[s1] * w2.pmf[s2] * empirical_copula(ranks, pt);
                }
            if (std::abs(total - smooth_copula_closed(ranks, enum_rs, u)) > 1e-10)
                throw std::runtime_error("closed form disagrees with support enumeration");
        }
        out << "selfcheck: closed form matches support enumeration\n";

        const ResolvedSmoothing rs = resolve(SmoothingScheme::beta_copula(), 64, 2);
        const std::vector<double> ugrid{0.1, 0.25, 0.5, 0.75, 0.9};
        const VarianceAuditReport audit = variance_audit(rs, 64, ugrid, 2000, 99);
        if (audit.violations != 0)
            throw std::runtime_error("variance bound violated in audit");
        out << "selfcheck: smoothing variance bound held on audit grid\n";
        out << "selfcheck: ok\n";
        return true;
    } catch (const std::exception& e) {
        out << "selfcheck: FAILED: " << e.what() << "\n";
        return false;
    }
}

}  // namespace smoothcop
