#include "smoothcop/processes.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <utility>
#include <vector>

namespace smoothcop {

namespace {

using detail::binom_pmf_window;
using detail::build_tail_table;
using detail::ceil_div;
using detail::PmfWindow;
using detail::TailTable;

constexpr std::uint64_t kSmoothIntTag = 0x534D4331ull;
constexpr double kExactOutcomeBudget = 1e6;

// Row-major-with-axis-0-fastest bookkeeping for a tensor grid.
struct Tensor {
    std::vector<std::size_t> dims, stride;
    std::size_t total = 1;

    explicit Tensor(const std::vector<std::vector<double>>& axes) {
        dims.reserve(axes.size());
        for (const auto& a : axes) dims.push_back(a.size());
        stride.assign(dims.size(), 1);
        for (std::size_t j = 1; j < dims.size(); ++j) stride[j] = stride[j - 1] * dims[j - 1];
        for (std::size_t s : dims) total *= s;
    }
};

// In-place cumulative sums along every axis: turns a point histogram into the
// count of observations componentwise <= each grid point.
void prefix_sum_all_axes(std::vector<double>& a, const Tensor& t) {
    for (std::size_t j = 0; j < t.dims.size(); ++j) {
        const std::size_t s = t.stride[j];
        for (std::size_t idx = 0; idx < a.size(); ++idx)
            if ((idx / s) % t.dims[j] > 0) a[idx] += a[idx - s];
    }
}

// Counts dominated points for n rows produced by get(i, j). Rows whose
// coordinate exceeds the last axis value in some margin fall outside every
// cell and are dropped, which matches the indicator semantics.
template <class Getter>
std::vector<double> dominated_counts(const std::vector<std::vector<double>>& axes,
                                     const Tensor& t, std::size_t n, Getter&& get) {
    std::vector<double> h(t.total, 0.0);
    const std::size_t d = axes.size();
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t idx = 0;
        bool inside = true;
        for (std::size_t j = 0; j < d; ++j) {
            const double v = get(i, j);
            const auto& ax = axes[j];
            const std::size_t pos =
                std::size_t(std::lower_bound(ax.begin(), ax.end(), v) - ax.begin());
            if (pos == ax.size()) {
                inside = false;
                break;
            }
            idx += pos * t.stride[j];
        }
        if (inside) h[idx] += 1.0;
    }
    prefix_sum_all_axes(h, t);
    return h;
}

// Odometer walk over a tensor grid: f(flat_index, coords, point).
template <class F>
void for_each_grid_point(const std::vector<std::vector<double>>& axes, F&& f) {
    const std::size_t d = axes.size();
    std::size_t total = 1;
    for (const auto& a : axes) total *= a.size();
    std::vector<std::size_t> c(d, 0);
    std::vector<double> u(d);
    for (std::size_t j = 0; j < d; ++j) u[j] = axes[j][0];
    for (std::size_t idx = 0; idx < total; ++idx) {
        f(idx, c, u);
        for (std::size_t j = 0; j < d; ++j) {
            if (++c[j] < axes[j].size()) {
                u[j] = axes[j][c[j]];
                break;
            }
            c[j] = 0;
            u[j] = axes[j][0];
        }
    }
}

// Successively contracts each support axis of `cur` against the grid-by-support
// pmf matrix P[j] (row g holds the Binomial(m_j, axes_j[g]) pmf over 0..m_j),
// yielding the smoothing-measure integral of the support tensor at every grid
// point. Layout keeps axis 0 fastest throughout.
std::vector<double> contract_support(std::vector<double> cur,
                                     const std::vector<std::size_t>& support_sizes,
                                     const std::vector<std::size_t>& grid_sizes,
                                     const std::vector<std::vector<double>>& P) {
    const std::size_t d = support_sizes.size();
    std::size_t inner = 1;
    for (std::size_t j = 0; j < d; ++j) {
        const std::size_t S = support_sizes[j], G = grid_sizes[j];
        const std::size_t outer = cur.size() / (inner * S);
        std::vector<double> next(inner * G * outer, 0.0);
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t g = 0; g < G; ++g) {
                double* dst = next.data() + (o * G + g) * inner;
                const double* prow = P[j].data() + g * S;
                for (std::size_t s = 0; s < S; ++s) {
                    const double w = prow[s];
                    if (w == 0.0) continue;
                    const double* src = cur.data() + (o * S + s) * inner;
                    for (std::size_t i = 0; i < inner; ++i) dst[i] += w * src[i];
                }
            }
        }
        cur = std::move(next);
        inner *= G;
    }
    return cur;
}

struct Fenwick {
    std::vector<int> t;
    explicit Fenwick(std::size_t n) : t(n + 1, 0) {}
    void reset() { std::fill(t.begin(), t.end(), 0); }
    void add(std::size_t i) {
        for (; i < t.size(); i += i & (~i + 1)) ++t[i];
    }
    long prefix(std::size_t i) const {
        long s = 0;
        for (; i > 0; i -= i & (~i + 1)) s += t[i];
        return s;
    }
};

struct RunningMax {
    double value = 0.0;
    double se = 0.0;
    void update(double v, double s) {
        if (v > value) {
            value = v;
            se = s;
        }
    }
};

class GridEval {
  public:
    GridEval(const Sample& sample, const CopulaModel& model, const EvaluationGrid& grid)
        : sample_(sample),
          model_(model),
          n_(sample.rows()),
          d_(sample.dim()),
          sqrtn_(std::sqrt(double(sample.rows()))),
          ranks_(compute_ranks(sample)),
          axes_(grid.axes),
          tx_(grid.axes) {
        if (grid.dim() != d_)
            throw std::invalid_argument("GridEval: grid dimension does not match the sample");
        if (model.dim() != d_)
            throw std::invalid_argument("GridEval: model dimension does not match the sample");
        build_tables();
    }

    double classic_sup() const { return classic_sup_; }

    double smooth_sup(const ResolvedSmoothing& rs) const {
        const std::vector<double> sm = smooth_table(rs);
        double sup = 0.0;
        for (std::size_t idx = 0; idx < tx_.total; ++idx)
            sup = std::max(sup, std::abs(sqrtn_ * (sm[idx] - cdf_[idx]) - tilde_[idx]));
        return sup;
    }

    DecompositionTerms decomposition(const ResolvedSmoothing& rs) const {
        DecompositionTerms out;
        out.classic_term = classic_sup_;
        const std::vector<double> sm = smooth_table(rs);
        for (std::size_t idx = 0; idx < tx_.total; ++idx)
            out.lhs = std::max(out.lhs, std::abs(sqrtn_ * (sm[idx] - cdf_[idx]) - tilde_[idx]));

        double outcomes = 1.0;
        for (std::int64_t m : rs.degrees) outcomes *= double(m) + 1.0;
        if (outcomes <= kExactOutcomeBudget)
            exact_integrals(rs, out);
        else
            mc_integrals(rs, out);
        return out;
    }

  private:
    const Sample& sample_;
    const CopulaModel& model_;
    std::size_t n_, d_;
    double sqrtn_;
    RankMatrix ranks_;
    std::vector<std::vector<double>> axes_;
    Tensor tx_;

    std::vector<std::vector<double>> sorted_col_;
    std::vector<double> gn_;                     // dominated-value counts
    std::vector<double> cdf_;                    // C at grid points
    std::vector<std::vector<double>> partial_;   // dC/du_j at grid points
    std::vector<std::vector<double>> alpha_ax_;  // marginal alpha at axis coords
    std::vector<double> tilde_;
    double classic_sup_ = 0.0;

    double marginal_alpha(std::size_t j, double v) const {
        const auto& col = sorted_col_[j];
        const double cnt = double(std::upper_bound(col.begin(), col.end(), v) - col.begin());
        return sqrtn_ * (cnt / double(n_) - v);
    }

    void build_tables() {
        sorted_col_.resize(d_);
        for (std::size_t j = 0; j < d_; ++j) {
            sorted_col_[j] = sample_.column(j);
            std::sort(sorted_col_[j].begin(), sorted_col_[j].end());
        }

        gn_ = dominated_counts(axes_, tx_, n_,
                               [&](std::size_t i, std::size_t j) { return sample_(i, j); });
        const std::vector<double> rn = dominated_counts(
            axes_, tx_, n_,
            [&](std::size_t i, std::size_t j) { return double(ranks_(i, j)) / double(n_); });

        alpha_ax_.resize(d_);
        for (std::size_t j = 0; j < d_; ++j) {
            alpha_ax_[j].resize(axes_[j].size());
            for (std::size_t a = 0; a < axes_[j].size(); ++a)
                alpha_ax_[j][a] = marginal_alpha(j, axes_[j][a]);
        }

        cdf_.resize(tx_.total);
        partial_.assign(d_, std::vector<double>(tx_.total));
        tilde_.resize(tx_.total);
        for_each_grid_point(
            axes_, [&](std::size_t idx, const std::vector<std::size_t>& c,
                       const std::vector<double>& u) {
                cdf_[idx] = model_.cdf(u);
                double lin = 0.0;
                for (std::size_t j = 0; j < d_; ++j) {
                    const double pj = model_.partial(j, u);
                    partial_[j][idx] = pj;
                    lin += pj * alpha_ax_[j][c[j]];
                }
                tilde_[idx] = sqrtn_ * (gn_[idx] / double(n_) - cdf_[idx]) - lin;
                // The copula cancels between the two processes, so the classic
                // remainder compares rank and value counts directly.
                const double rem = sqrtn_ * (rn[idx] - gn_[idx]) / double(n_) + lin;
                classic_sup_ = std::max(classic_sup_, std::abs(rem));
            });
    }

    std::vector<std::vector<TailTable>> tail_tables(const ResolvedSmoothing& rs) const {
        std::vector<std::vector<TailTable>> tts(d_);
        for (std::size_t j = 0; j < d_; ++j) {
            tts[j].reserve(axes_[j].size());
            for (double p : axes_[j]) tts[j].push_back(build_tail_table(rs.degrees[j], p, n_));
        }
        return tts;
    }

    // Closed-form smoothed estimator on the whole grid:
    //   C_n^nu(u) = (1/n) sum_i prod_j Pr(S_j >= ceil(m_j R_ij / n)).
    std::vector<double> smooth_table(const ResolvedSmoothing& rs) const {
        if (rs.degrees.size() != d_)
            throw std::invalid_argument("smooth_table: degree count does not match dimension");
        const auto tts = tail_tables(rs);
        std::vector<double> out(tx_.total);

        if (d_ == 2) {
            // Pair margins through the rank permutation sigma(r1) = r2, then
            // sweep margin-0 tail windows against per-coordinate prefix sums.
            std::vector<std::size_t> sigma(n_ + 1, 0);
            for (std::size_t i = 0; i < n_; ++i)
                sigma[std::size_t(ranks_(i, 0))] = std::size_t(ranks_(i, 1));
            const std::size_t g0 = tx_.dims[0], g1 = tx_.dims[1];
            std::vector<double> w2(n_ + 1, 0.0), pw2(n_ + 1, 0.0);
            for (std::size_t b = 0; b < g1; ++b) {
                const TailTable& t2 = tts[1][b];
                for (std::size_t r = 1; r <= n_; ++r) {
                    w2[r] = t2.tail[sigma[r]];
                    pw2[r] = pw2[r - 1] + w2[r];
                }
                for (std::size_t a = 0; a < g0; ++a) {
                    const TailTable& t1 = tts[0][a];
                    double s = t1.r_begin > 1 ? pw2[t1.r_begin - 1] : 0.0;
                    const std::size_t hi = std::min(t1.r_end, n_);
                    for (std::size_t r = t1.r_begin; r <= hi; ++r) s += t1.tail[r] * w2[r];
                    out[a + g0 * b] = s / double(n_);
                }
            }
            return out;
        }

        for_each_grid_point(axes_, [&](std::size_t idx, const std::vector<std::size_t>& c,
                                       const std::vector<double>&) {
            double acc = 0.0;
            for (std::size_t i = 0; i < n_; ++i) {
                double p = 1.0;
                for (std::size_t j = 0; j < d_; ++j) {
                    p *= tts[j][c[j]].tail[std::size_t(ranks_(i, j))];
                    if (p == 0.0) break;
                }
                acc += p;
            }
            out[idx] = acc / double(n_);
        });
        return out;
    }

    std::vector<std::vector<double>> pmf_matrices(const ResolvedSmoothing& rs) const {
        std::vector<std::vector<double>> P(d_);
        for (std::size_t j = 0; j < d_; ++j) {
            const std::size_t S = std::size_t(rs.degrees[j]) + 1;
            P[j].assign(axes_[j].size() * S, 0.0);
            for (std::size_t a = 0; a < axes_[j].size(); ++a) {
                const PmfWindow w = binom_pmf_window(rs.degrees[j], axes_[j][a]);
                for (std::size_t k = 0; k < w.pmf.size(); ++k)
                    P[j][a * S + std::size_t(w.klo) + k] = w.pmf[k];
            }
        }
        return P;
    }

    // Full enumeration over the product binomial support (outcome count within
    // budget): both integrals become pmf contractions of support tensors.
    void exact_integrals(const ResolvedSmoothing& rs, DecompositionTerms& out) const {
        std::vector<std::vector<double>> sax(d_);
        std::vector<std::size_t> ssz(d_), gsz(d_);
        for (std::size_t j = 0; j < d_; ++j) {
            const std::int64_t m = rs.degrees[j];
            sax[j].resize(std::size_t(m) + 1);
            for (std::int64_t s = 0; s <= m; ++s) sax[j][std::size_t(s)] = double(s) / double(m);
            ssz[j] = sax[j].size();
            gsz[j] = axes_[j].size();
        }
        const Tensor stx(sax);

        std::vector<std::vector<double>> sa_alpha(d_);
        for (std::size_t j = 0; j < d_; ++j) {
            sa_alpha[j].resize(ssz[j]);
            for (std::size_t s = 0; s < ssz[j]; ++s) sa_alpha[j][s] = marginal_alpha(j, sax[j][s]);
        }
        const std::vector<double> scnt = dominated_counts(
            sax, stx, n_, [&](std::size_t i, std::size_t j) { return sample_(i, j); });

        std::vector<double> bias_t(stx.total), drift_t(stx.total);
        for_each_grid_point(sax, [&](std::size_t idx, const std::vector<std::size_t>& c,
                                     const std::vector<double>& u) {
            const double cv = model_.cdf(u);
            bias_t[idx] = cv;
            double lin = 0.0;
            for (std::size_t j = 0; j < d_; ++j) lin += model_.partial(j, u) * sa_alpha[j][c[j]];
            drift_t[idx] = sqrtn_ * (scnt[idx] / double(n_) - cv) - lin;
        });

        const auto P = pmf_matrices(rs);
        const std::vector<double> bias_int = contract_support(std::move(bias_t), ssz, gsz, P);
        const std::vector<double> drift_int = contract_support(std::move(drift_t), ssz, gsz, P);

        for (std::size_t idx = 0; idx < tx_.total; ++idx) {
            out.bias_term = std::max(out.bias_term, sqrtn_ * std::abs(bias_int[idx] - cdf_[idx]));
            out.smooth_drift_term =
                std::max(out.smooth_drift_term, std::abs(drift_int[idx] - tilde_[idx]));
        }
        out.bias_exact = out.drift_exact = true;
        out.bias_stderr = out.drift_stderr = 0.0;
    }

    // Monte Carlo path: one stream per grid point keyed on (mc.seed, point
    // index), shared between the bias and drift integrals, so results are
    // independent of evaluation order and worker count.
    void mc_integrals(const ResolvedSmoothing& rs, DecompositionTerms& out) const {
        rs.mc.validate();
        const std::int64_t M = rs.mc.draws;
        std::vector<std::vector<BinomialSampler>> smp(d_);
        for (std::size_t j = 0; j < d_; ++j) {
            smp[j].reserve(axes_[j].size());
            for (double p : axes_[j]) smp[j].emplace_back(rs.degrees[j], p);
        }

        RunningMax bias_max, drift_max;
        if (d_ == 2)
            mc_integrals_2d(rs, smp, M, bias_max, drift_max);
        else
            mc_integrals_generic(rs, smp, M, bias_max, drift_max);

        out.bias_term = bias_max.value;
        out.bias_stderr = bias_max.se;
        out.smooth_drift_term = drift_max.value;
        out.drift_stderr = drift_max.se;
        out.bias_exact = out.drift_exact = false;
    }

    void finalize_point(std::size_t idx, std::int64_t M, double bs1, double bs2, double ds1,
                        double ds2, RunningMax& bias_max, RunningMax& drift_max) const {
        const double bmean = bs1 / double(M);
        const double dmean = ds1 / double(M);
        double bse = 0.0, dse = 0.0;
        if (M > 1) {
            const double bvar = std::max(0.0, (bs2 - double(M) * bmean * bmean) / double(M - 1));
            const double dvar = std::max(0.0, (ds2 - double(M) * dmean * dmean) / double(M - 1));
            bse = sqrtn_ * std::sqrt(bvar / double(M));
            dse = std::sqrt(dvar / double(M));
        }
        bias_max.update(sqrtn_ * std::abs(bmean - cdf_[idx]), bse);
        drift_max.update(std::abs(dmean - tilde_[idx]), dse);
    }

    void mc_integrals_2d(const ResolvedSmoothing& rs,
                         const std::vector<std::vector<BinomialSampler>>& smp, std::int64_t M,
                         RunningMax& bias_max, RunningMax& drift_max) const {
        const std::size_t g0 = tx_.dims[0];
        const double m0 = double(rs.degrees[0]), m1 = double(rs.degrees[1]);

        // Data sorted by the first coordinate; the Fenwick tree counts second
        // coordinate ranks, so each query is an orthogonal range count.
        std::vector<std::pair<double, std::size_t>> by_u1(n_);
        for (std::size_t i = 0; i < n_; ++i)
            by_u1[i] = {sample_(i, 0), std::size_t(ranks_(i, 1))};
        std::sort(by_u1.begin(), by_u1.end());
        Fenwick fen(n_);

        struct Query {
            double w1;
            double lin;  // everything in C~(W) except the count term
            std::uint32_t t2, slot;
        };
        const std::size_t per_chunk = std::max<std::size_t>(1, 262144 / std::size_t(M));
        std::vector<Query> queries;
        std::vector<double> bs1(per_chunk), bs2(per_chunk), ds1(per_chunk), ds2(per_chunk);
        std::vector<double> w(2);

        for (std::size_t p0 = 0; p0 < tx_.total; p0 += per_chunk) {
            const std::size_t p1 = std::min(tx_.total, p0 + per_chunk);
            queries.clear();
            std::fill(bs1.begin(), bs1.end(), 0.0);
            std::fill(bs2.begin(), bs2.end(), 0.0);
            std::fill(ds1.begin(), ds1.end(), 0.0);
            std::fill(ds2.begin(), ds2.end(), 0.0);

            for (std::size_t p = p0; p < p1; ++p) {
                const std::size_t a = p % g0, b = p / g0;
                rng::Engine eng(rng::derive_seed({rs.mc.seed, kSmoothIntTag, p}));
                for (std::int64_t t = 0; t < M; ++t) {
                    w[0] = double(smp[0][a].draw(eng)) / m0;
                    w[1] = double(smp[1][b].draw(eng)) / m1;
                    const double cw = model_.cdf(w);
                    bs1[p - p0] += cw;
                    bs2[p - p0] += cw * cw;
                    double lin = -sqrtn_ * cw;
                    lin -= model_.partial(0, w) * marginal_alpha(0, w[0]);
                    lin -= model_.partial(1, w) * marginal_alpha(1, w[1]);
                    const auto& col2 = sorted_col_[1];
                    const std::uint32_t t2 = std::uint32_t(
                        std::upper_bound(col2.begin(), col2.end(), w[1]) - col2.begin());
                    queries.push_back({w[0], lin, t2, std::uint32_t(p - p0)});
                }
            }

            std::sort(queries.begin(), queries.end(),
                      [](const Query& x, const Query& y) { return x.w1 < y.w1; });
            fen.reset();
            std::size_t ptr = 0;
            for (const Query& q : queries) {
                while (ptr < n_ && by_u1[ptr].first <= q.w1) fen.add(by_u1[ptr++].second);
                const double val = sqrtn_ * double(fen.prefix(q.t2)) / double(n_) + q.lin;
                ds1[q.slot] += val;
                ds2[q.slot] += val * val;
            }

            for (std::size_t p = p0; p < p1; ++p)
                finalize_point(p, M, bs1[p - p0], bs2[p - p0], ds1[p - p0], ds2[p - p0], bias_max,
                               drift_max);
        }
    }

    void mc_integrals_generic(const ResolvedSmoothing& rs,
                              const std::vector<std::vector<BinomialSampler>>& smp,
                              std::int64_t M, RunningMax& bias_max, RunningMax& drift_max) const {
        std::vector<double> w(d_);
        for_each_grid_point(axes_, [&](std::size_t idx, const std::vector<std::size_t>& c,
                                       const std::vector<double>&) {
            rng::Engine eng(rng::derive_seed({rs.mc.seed, kSmoothIntTag, idx}));
            double bs1 = 0.0, bs2 = 0.0, ds1 = 0.0, ds2 = 0.0;
            for (std::int64_t t = 0; t < M; ++t) {
                for (std::size_t j = 0; j < d_; ++j)
                    w[j] = double(smp[j][c[j]].draw(eng)) / double(rs.degrees[j]);
                const double cw = model_.cdf(w);
                bs1 += cw;
                bs2 += cw * cw;
                std::size_t cnt = 0;
                for (std::size_t i = 0; i < n_; ++i) {
                    bool dom = true;
                    for (std::size_t j = 0; j < d_; ++j)
                        if (!(sample_(i, j) <= w[j])) {
                            dom = false;
                            break;
                        }
                    cnt += dom;
                }
                double val = sqrtn_ * (double(cnt) / double(n_) - cw);
                for (std::size_t j = 0; j < d_; ++j)
                    val -= model_.partial(j, w) * marginal_alpha(j, w[j]);
                ds1 += val;
                ds2 += val * val;
            }
            finalize_point(idx, M, bs1, bs2, ds1, ds2, bias_max, drift_max);
        });
    }
};

std::string violation_message(const DecompositionTerms& t) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "decomposition inequality violated: lhs=%.17g exceeds "
                  "bias+classic+drift=%.17g by more than slack=%.17g",
                  t.lhs, t.rhs(), t.slack());
    return buf;
}

}  // namespace

double tilde_process(const Sample& sample, const CopulaModel& model, std::span<const double> u) {
    double out = empirical_process_alpha(sample, model, u);
    for (std::size_t j = 0; j < sample.dim(); ++j)
        out -= model.partial(j, u) * marginal_process_alpha(sample, j, u[j]);
    return out;
}

double empirical_copula_process(const RankMatrix& ranks, const CopulaModel& model,
                                std::span<const double> u) {
    return std::sqrt(double(ranks.rows())) * (empirical_copula(ranks, u) - model.cdf(u));
}

double smooth_copula_process(const RankMatrix& ranks, const ResolvedSmoothing& scheme,
                             const CopulaModel& model, std::span<const double> u,
                             const Accuracy& acc) {
    return std::sqrt(double(ranks.rows())) *
           (smooth_copula_closed(ranks, scheme, u, acc) - model.cdf(u));
}

double stute_remainder_classic(const Sample& sample, const CopulaModel& model,
                               const EvaluationGrid& grid) {
    return GridEval(sample, model, grid).classic_sup();
}

double stute_remainder_smooth(const Sample& sample, const CopulaModel& model,
                              const ResolvedSmoothing& scheme, const EvaluationGrid& grid) {
    return GridEval(sample, model, grid).smooth_sup(scheme);
}

inequality_violation::inequality_violation(const DecompositionTerms& t)
    : std::runtime_error(violation_message(t)), terms(t) {}

DecompositionTerms decomposition_terms(const Sample& sample, const CopulaModel& model,
                                       const ResolvedSmoothing& scheme,
                                       const EvaluationGrid& grid) {
    const DecompositionTerms t = GridEval(sample, model, grid).decomposition(scheme);
    if (t.lhs > t.rhs() + t.slack()) throw inequality_violation(t);
    return t;
}

}  // namespace smoothcop
