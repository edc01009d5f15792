#include "elearn/estimate.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "elearn/errors.hpp"
#include "elearn/rng.hpp"

namespace elearn {

std::vector<double> ExperienceEstimates::b() const {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.b_hat);
    return out;
}

std::vector<int> ExperienceEstimates::ts() const {
    std::vector<int> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.t);
    return out;
}

namespace {

double mean(const std::vector<double>& x) {
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double cov(const std::vector<double>& x, const std::vector<double>& y) {
    const double mx = mean(x), my = mean(y);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mx) * (y[i] - my);
    return s / static_cast<double>(x.size());
}

void demean_within(std::vector<double>& x, const std::vector<int>& g, int n_groups,
                   std::vector<double>& sums, std::vector<std::size_t>& counts) {
    sums.assign(static_cast<std::size_t>(n_groups), 0.0);
    counts.assign(static_cast<std::size_t>(n_groups), 0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        sums[static_cast<std::size_t>(g[i])] += x[i];
        counts[static_cast<std::size_t>(g[i])] += 1;
    }
    for (int j = 0; j < n_groups; ++j)
        if (counts[static_cast<std::size_t>(j)] > 0)
            sums[static_cast<std::size_t>(j)] /=
                static_cast<double>(counts[static_cast<std::size_t>(j)]);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= sums[static_cast<std::size_t>(g[i])];
}

// Alternating within-group demeaning (two saturated fixed-effect sets) until
// the adjustments vanish.
void partial_out(std::vector<std::vector<double>*> cols, const std::vector<int>* g1,
                 const std::vector<int>* g2) {
    if (!g1 && !g2) return;
    auto ngroups = [](const std::vector<int>& g) {
        return *std::max_element(g.begin(), g.end()) + 1;
    };
    std::vector<double> sums;
    std::vector<std::size_t> counts;
    const int n1 = g1 ? ngroups(*g1) : 0;
    const int n2 = g2 ? ngroups(*g2) : 0;
    for (auto* col : cols) {
        for (int iter = 0; iter < 200; ++iter) {
            double before = 0.0;
            for (double v : *col) before += v * v;
            if (g1) demean_within(*col, *g1, n1, sums, counts);
            if (g2) demean_within(*col, *g2, n2, sums, counts);
            double after = 0.0;
            for (double v : *col) after += v * v;
            if (!g2 || !g1 || before - after <= 1e-12 * std::max(1.0, before)) break;
        }
    }
}

struct CrossSection {
    std::vector<double> y, s, d;
};

// worker-level columns gathered (optionally by resample index) and partialled
struct WorkerData {
    std::vector<double> s, d;
    std::vector<int> cohort, region;
    const std::vector<int>* g1 = nullptr;
    const std::vector<int>* g2 = nullptr;
};

WorkerData gather_workers(const Panel& panel, const CovariateSpec& cv,
                          const std::vector<std::size_t>* index) {
    WorkerData wd;
    const std::size_t n = index ? index->size() : panel.n_workers();
    wd.s.resize(n);
    wd.d.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t w = index ? (*index)[i] : i;
        wd.s[i] = panel.S[w];
        wd.d[i] = panel.D[w];
    }
    if (cv.any() && panel.group_cohort.empty())
        throw ConfigError("covariates reference group columns absent from the panel");
    if (cv.cohort) {
        wd.cohort.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            wd.cohort[i] = panel.group_cohort[index ? (*index)[i] : i];
        wd.g1 = &wd.cohort;
    }
    if (cv.region) {
        wd.region.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            wd.region[i] = panel.group_region[index ? (*index)[i] : i];
        wd.g2 = &wd.region;
    }
    return wd;
}

std::vector<double> gather_wage(const Panel& panel, int t, const std::vector<std::size_t>* index) {
    const std::size_t n = index ? index->size() : panel.n_workers();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = panel.wage[panel.idx(index ? (*index)[i] : i, t)];
    return y;
}

double ratio_estimate(std::vector<double> y, std::vector<double> s, std::vector<double> d,
                      const std::vector<int>* g1, const std::vector<int>* g2, bool use_ols) {
    partial_out({&y, &s, &d}, g1, g2);
    if (use_ols) {
        const double vs = cov(s, s);
        if (vs < 1e-12) throw IdentificationError("ols: no schooling variation");
        return cov(s, y) / vs;
    }
    const double den = cov(d, s);
    if (std::abs(den) < 1e-12)
        throw IdentificationError("wald: weak instrument (zero first-stage covariance)");
    return cov(d, y) / den;
}

}  // namespace

FirstStageResult first_stage(const Panel& panel, const CovariateSpec& covariates) {
    WorkerData wd = gather_workers(panel, covariates, nullptr);
    const std::size_t n = wd.s.size();
    {
        const double d0 = wd.d[0];
        bool varies = false;
        for (double d : wd.d)
            if (d != d0) {
                varies = true;
                break;
            }
        if (!varies) throw IdentificationError("first_stage: instrument takes a single value");
    }
    partial_out({&wd.s, &wd.d}, wd.g1, wd.g2);
    const double vd = cov(wd.d, wd.d);
    if (vd < 1e-12) throw IdentificationError("first_stage: instrument absorbed by covariates");
    FirstStageResult fs;
    fs.n = n;
    fs.kappa_hat = cov(wd.d, wd.s) / vd;
    double rss = 0.0;
    const double ms = mean(wd.s), md = mean(wd.d);
    for (std::size_t i = 0; i < n; ++i) {
        const double e = (wd.s[i] - ms) - fs.kappa_hat * (wd.d[i] - md);
        rss += e * e;
    }
    std::size_t dof = n >= 3 ? n - 2 : 1;
    const double sigma2 = rss / static_cast<double>(dof);
    fs.se = std::sqrt(sigma2 / (vd * static_cast<double>(n)));
    fs.F = fs.se > 0.0 ? (fs.kappa_hat / fs.se) * (fs.kappa_hat / fs.se) : 0.0;
    return fs;
}

double wald_at(const Panel& panel, int t, const CovariateSpec& covariates) {
    if (t < 0 || t > panel.horizon) throw InvalidParameter("wald_at: t outside panel horizon");
    WorkerData wd = gather_workers(panel, covariates, nullptr);
    return ratio_estimate(gather_wage(panel, t, nullptr), wd.s, wd.d, wd.g1, wd.g2, false);
}

ExperienceEstimates experience_profile(const Panel& panel, const ProfileOptions& opts) {
    ExperienceEstimates out;
    out.tag = opts.use_ols ? EstimatorTag::ols : EstimatorTag::hidden_iv;
    if (!opts.use_ols) out.first_stage = first_stage(panel, opts.covariates);
    WorkerData wd = gather_workers(panel, opts.covariates, nullptr);
    out.records.resize(static_cast<std::size_t>(panel.horizon) + 1);
    for (int t = 0; t <= panel.horizon; ++t) {
        auto& r = out.records[static_cast<std::size_t>(t)];
        r.t = t;
        r.n_t = panel.n_workers();
        try {
            r.b_hat =
                ratio_estimate(gather_wage(panel, t, nullptr), wd.s, wd.d, wd.g1, wd.g2,
                               opts.use_ols);
        } catch (const IdentificationError&) {
            r.ok = false;
        }
    }

    if (opts.bootstrap_resamples > 0) {
        const std::size_t n = panel.n_workers();
        std::vector<std::vector<double>> draws(static_cast<std::size_t>(panel.horizon) + 1);
        std::vector<std::size_t> index(n);
        for (std::size_t b = 0; b < opts.bootstrap_resamples; ++b) {
            Stream rs(opts.bootstrap_seed, b);
            for (std::size_t i = 0; i < n; ++i)
                index[i] = static_cast<std::size_t>(rs.next_u64() % n);
            WorkerData bd = gather_workers(panel, opts.covariates, &index);
            std::vector<double> prof;
            prof.reserve(static_cast<std::size_t>(panel.horizon) + 1);
            bool complete = true;
            for (int t = 0; t <= panel.horizon; ++t) {
                try {
                    const double v = ratio_estimate(gather_wage(panel, t, &index), bd.s, bd.d,
                                                    bd.g1, bd.g2, opts.use_ols);
                    draws[static_cast<std::size_t>(t)].push_back(v);
                    prof.push_back(v);
                } catch (const IdentificationError&) {
                    complete = false;
                }
            }
            if (complete) out.bootstrap_profiles.push_back(std::move(prof));
        }
        for (int t = 0; t <= panel.horizon; ++t) {
            const auto& dr = draws[static_cast<std::size_t>(t)];
            auto& r = out.records[static_cast<std::size_t>(t)];
            if (dr.size() >= 2) {
                const double m = mean(dr);
                double ss = 0.0;
                for (double v : dr) ss += (v - m) * (v - m);
                r.se = std::sqrt(ss / static_cast<double>(dr.size() - 1));
            }
        }
    }
    return out;
}

FlatnessTest flatness_test(const Panel& panel, const CovariateSpec& covariates) {
    const std::size_t n = panel.n_workers();
    const int T = panel.horizon;
    if (T < 1) throw InvalidParameter("flatness_test: need at least two experience levels");
    WorkerData wd = gather_workers(panel, covariates, nullptr);
    std::vector<std::vector<double>> y(static_cast<std::size_t>(T) + 1);
    for (int t = 0; t <= T; ++t) y[static_cast<std::size_t>(t)] = gather_wage(panel, t, nullptr);
    {
        std::vector<std::vector<double>*> cols{&wd.s, &wd.d};
        for (auto& col : y) cols.push_back(&col);
        partial_out(cols, wd.g1, wd.g2);
    }
    const double csd = cov(wd.d, wd.s);
    if (std::abs(csd) < 1e-12) throw IdentificationError("flatness_test: weak instrument");
    const double md = mean(wd.d), ms = mean(wd.s);
    std::vector<double> b(static_cast<std::size_t>(T) + 1);
    for (int t = 0; t <= T; ++t) b[static_cast<std::size_t>(t)] = cov(wd.d, y[static_cast<std::size_t>(t)]) / csd;

    // influence contributions of b_t per worker; test vector d_t = b_t - b_0
    Eigen::MatrixXd V = Eigen::MatrixXd::Zero(T, T);
    Eigen::VectorXd dvec(T);
    for (int t = 1; t <= T; ++t) dvec(t - 1) = b[static_cast<std::size_t>(t)] - b[0];
    std::vector<double> my(static_cast<std::size_t>(T) + 1);
    for (int t = 0; t <= T; ++t) my[static_cast<std::size_t>(t)] = mean(y[static_cast<std::size_t>(t)]);
    Eigen::VectorXd phi(T);
    Eigen::VectorXd phibar = Eigen::VectorXd::Zero(T);
    std::vector<Eigen::VectorXd> phis(n, Eigen::VectorXd(T));
    for (std::size_t i = 0; i < n; ++i) {
        const double dd = wd.d[i] - md;
        const double ss = wd.s[i] - ms;
        const double psi0 = dd * ((y[0][i] - my[0]) - b[0] * ss) / csd;
        for (int t = 1; t <= T; ++t) {
            const double psit =
                dd * ((y[static_cast<std::size_t>(t)][i] - my[static_cast<std::size_t>(t)]) -
                      b[static_cast<std::size_t>(t)] * ss) /
                csd;
            phis[i](t - 1) = psit - psi0;
        }
        phibar += phis[i];
    }
    phibar /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::VectorXd c = phis[i] - phibar;
        V.noalias() += c * c.transpose();
    }
    V /= static_cast<double>(n) * static_cast<double>(n);

    FlatnessTest ft;
    ft.dof = T;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(V);
    if (ldlt.info() != Eigen::Success)
        throw NumericError("flatness_test: singular covariance of contrasts");
    ft.stat = dvec.dot(ldlt.solve(dvec));
    ft.critical_5pct = chi_squared_critical_5pct(T);
    ft.p_value = chi_squared_sf(ft.stat, T);
    ft.reject_5pct = ft.stat > ft.critical_5pct;
    return ft;
}

double chi_squared_critical_5pct(int dof) {
    boost::math::chi_squared dist(dof);
    return boost::math::quantile(dist, 0.95);
}

double chi_squared_sf(double x, int dof) {
    if (x < 0.0) return 1.0;
    boost::math::chi_squared dist(dof);
    return boost::math::cdf(boost::math::complement(dist, x));
}

MarginWeights iv_margin_weights(const Panel& panel) {
    const std::size_t n = panel.n_workers();
    int s_min = std::numeric_limits<int>::max(), s_max = std::numeric_limits<int>::min();
    for (double s : panel.S) {
        if (std::abs(s - std::round(s)) > 1e-9)
            throw InvalidParameter("iv_margin_weights: schooling must be discretized first");
        s_min = std::min(s_min, static_cast<int>(std::lround(s)));
        s_max = std::max(s_max, static_cast<int>(std::lround(s)));
    }
    const double csd = cov(panel.S, panel.D);
    if (std::abs(csd) < 1e-12)
        throw IdentificationError("iv_margin_weights: zero schooling-instrument covariance");
    MarginWeights mw;
    std::vector<double> ind(n);
    for (int s = s_min + 1; s <= s_max; ++s) {
        for (std::size_t i = 0; i < n; ++i) ind[i] = panel.S[i] >= s ? 1.0 : 0.0;
        mw.margins.push_back(s);
        mw.weights.push_back(cov(ind, panel.D) / csd);
    }
    return mw;
}

WolsResult weighted_ols_profile(const Panel& panel, const MarginWeights& weights,
                                const CovariateSpec& covariates) {
    const std::size_t n = panel.n_workers();
    const std::size_t m = weights.margins.size();
    if (m == 0) throw InvalidParameter("weighted_ols_profile: no margins");

    // Merge margins whose step indicators coincide on the sample (unpopulated
    // years); each merged block shares one column and its per-year coefficient
    // is the block jump divided by the block width.
    std::vector<std::size_t> block_of(m);
    std::vector<int> block_cut;  // cutoff year of each retained block
    std::vector<std::size_t> year_count(static_cast<std::size_t>(weights.margins.back()) + 2, 0);
    std::vector<int> syear(n);
    for (std::size_t i = 0; i < n; ++i) {
        syear[i] = static_cast<int>(std::lround(panel.S[i]));
        if (syear[i] >= 0 && static_cast<std::size_t>(syear[i]) < year_count.size())
            year_count[static_cast<std::size_t>(syear[i])]++;
    }
    bool merged = false;
    for (std::size_t j = 0; j < m; ++j) {
        const int s = weights.margins[j];
        const bool distinct =
            j == 0 || year_count[static_cast<std::size_t>(s - 1)] > 0;  // someone sits below cut
        if (distinct) {
            block_cut.push_back(s);
        } else {
            merged = true;
        }
        block_of[j] = block_cut.size() - 1;
    }
    const std::size_t nb = block_cut.size();
    std::vector<std::size_t> block_width(nb, 0);
    for (std::size_t j = 0; j < m; ++j) block_width[block_of[j]]++;

    const bool with_z = panel.has_z();
    std::vector<int> zyears;  // schooling years receiving a Z interaction
    if (with_z) {
        for (std::size_t y = 0; y < year_count.size(); ++y)
            if (year_count[y] > 0) zyears.push_back(static_cast<int>(y));
    }
    const std::size_t k = 1 + nb + (with_z ? zyears.size() : 0);

    Eigen::MatrixXd X(n, k);
    for (std::size_t i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        for (std::size_t b = 0; b < nb; ++b) X(i, 1 + b) = syear[i] >= block_cut[b] ? 1.0 : 0.0;
        if (with_z)
            for (std::size_t zj = 0; zj < zyears.size(); ++zj)
                X(i, 1 + nb + zj) = syear[i] == zyears[zj] ? panel.Z[i] : 0.0;
    }
    Eigen::MatrixXd xtx = X.transpose() * X;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
    if (ldlt.info() != Eigen::Success)
        throw IdentificationError("weighted_ols_profile: collinear design");

    WolsResult out;
    out.margins = weights.margins;
    out.weights = weights.weights;
    out.merged_margins = merged;
    Eigen::VectorXd yv(n);
    for (int t = 0; t <= panel.horizon; ++t) {
        for (std::size_t i = 0; i < n; ++i) yv(i) = panel.wage[panel.idx(i, t)];
        Eigen::VectorXd beta = ldlt.solve(X.transpose() * yv);
        std::vector<double> g1(m), g2;
        double bsum = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            g1[j] = beta(1 + static_cast<Eigen::Index>(block_of[j])) /
                    static_cast<double>(block_width[block_of[j]]);
            bsum += weights.weights[j] * g1[j];
        }
        out.gamma1.push_back(std::move(g1));
        out.b_wols.push_back(bsum);
        if (with_z) {
            g2.resize(m);
            double csum = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
                const int s = weights.margins[j];
                auto it = std::find(zyears.begin(), zyears.end(), s);
                g2[j] = it == zyears.end()
                            ? 0.0
                            : beta(1 + static_cast<Eigen::Index>(nb) +
                                   (it - zyears.begin()));
                csum += weights.weights[j] * g2[j];
            }
            out.gamma2.push_back(std::move(g2));
            out.c_wols.push_back(csum);
        }
    }
    (void)covariates;  // group partialling not combined with margin dummies in v1
    return out;
}

OlsPaths ols_correlate_profile(const Panel& panel, const CovariateSpec& covariates) {
    if (!panel.has_z())
        throw ConfigError("ols_correlate_profile: panel has no hidden correlate column");
    WorkerData wd = gather_workers(panel, covariates, nullptr);
    std::vector<double> z(panel.Z);
    OlsPaths out;
    for (int t = 0; t <= panel.horizon; ++t) {
        std::vector<double> y = gather_wage(panel, t, nullptr);
        std::vector<double> s(wd.s), zz(z);
        partial_out({&y, &s, &zz}, wd.g1, wd.g2);
        const double vss = cov(s, s), vzz = cov(zz, zz), vsz = cov(s, zz);
        const double det = vss * vzz - vsz * vsz;
        if (std::abs(det) < 1e-14)
            throw IdentificationError("ols_correlate_profile: collinear schooling and correlate");
        const double cys = cov(y, s), cyz = cov(y, zz);
        out.ts.push_back(t);
        out.b_ols.push_back((vzz * cys - vsz * cyz) / det);
        out.c_ols.push_back((vss * cyz - vsz * cys) / det);
    }
    return out;
}

ExperienceEstimates late_profile(const HPanel& hpanel) {
    const std::size_t n = hpanel.n_workers();
    std::vector<double> s(n), d(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = hpanel.S[i];
        d[i] = hpanel.D[i];
    }
    const double den = cov(d, s);
    if (std::abs(den) < 1e-12)
        throw IdentificationError("late_profile: zero complier share");
    ExperienceEstimates out;
    out.tag = EstimatorTag::late;
    const double vd = cov(d, d);
    out.first_stage.kappa_hat = vd > 0 ? den / vd : 0.0;  // complier share
    out.first_stage.n = n;
    std::vector<double> y(n);
    for (int t = 0; t <= hpanel.horizon; ++t) {
        for (std::size_t i = 0; i < n; ++i) y[i] = hpanel.wage[hpanel.idx(i, t)];
        ExperienceEstimate r;
        r.t = t;
        r.n_t = n;
        r.b_hat = cov(d, y) / den;
        out.records.push_back(r);
    }
    return out;
}

void write_estimates_csv(const std::vector<ExperienceEstimates>& all, std::ostream& os,
                         const std::string& header_comment) {
    if (!header_comment.empty()) os << "# " << header_comment << "\n";
    os << "estimator,t,b_hat,se,n\n";
    auto name = [](EstimatorTag tag) {
        switch (tag) {
            case EstimatorTag::hidden_iv: return "hidden_iv";
            case EstimatorTag::transparent_iv: return "transparent_iv";
            case EstimatorTag::partial_iv: return "partial_iv";
            case EstimatorTag::ols: return "ols";
            case EstimatorTag::wols: return "wols";
            case EstimatorTag::late: return "late";
        }
        return "unknown";
    };
    char buf[64];
    for (const auto& e : all) {
        for (const auto& r : e.records) {
            if (!r.ok) continue;
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g", r.b_hat, r.se);
            os << name(e.tag) << ',' << r.t << ',' << buf << ',' << r.n_t << '\n';
        }
    }
}

std::map<std::string, std::string> fit_summary(const MixingFit& fit, const std::string& mode) {
    char buf[64];
    std::map<std::string, std::string> out;
    auto put = [&](const char* key, double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out[key] = buf;
    };
    put("kappa_hat", fit.kappa_hat);
    put("b0", fit.b0);
    put("b_inf", fit.b_inf);
    put("rss", fit.rss);
    out["identified"] = fit.identified ? "true" : "false";
    out["mode"] = mode;
    return out;
}

}  // namespace elearn
