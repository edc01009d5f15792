#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include "elearn/errors.hpp"
#include "elearn/estimate.hpp"

namespace elearn {

namespace {

// Weighted least squares of y on two kappa-dependent regressors, profiled over
// kappa: closed-form (b1, b2) on a grid, then golden-section refinement around
// the grid argmin. Ties break toward the smallest kappa.
struct ProfiledFit {
    double kappa = 0.0;
    double b1 = 0.0;
    double b2 = 0.0;
    double rss = 0.0;
};

struct Subproblem {
    double b1 = 0.0, b2 = 0.0, rss = 0.0;
};

using RegressorFn = std::function<void(double kappa, int t, double& x1, double& x2)>;

Subproblem solve_linear(const std::vector<int>& ts, const std::vector<double>& y,
                        const std::vector<double>& w, const RegressorFn& reg, double kappa) {
    double a11 = 0, a12 = 0, a22 = 0, c1 = 0, c2 = 0, yy = 0;
    std::vector<double> x1s(ts.size()), x2s(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) {
        double x1, x2;
        reg(kappa, ts[i], x1, x2);
        x1s[i] = x1;
        x2s[i] = x2;
        a11 += w[i] * x1 * x1;
        a12 += w[i] * x1 * x2;
        a22 += w[i] * x2 * x2;
        c1 += w[i] * x1 * y[i];
        c2 += w[i] * x2 * y[i];
        yy += w[i] * y[i] * y[i];
    }
    Subproblem s;
    const double det = a11 * a22 - a12 * a12;
    const double scale = std::max(a11 * a22, 1e-300);
    if (det > 1e-12 * scale) {
        s.b1 = (a22 * c1 - a12 * c2) / det;
        s.b2 = (a11 * c2 - a12 * c1) / det;
    } else if (a11 >= a22 && a11 > 0) {
        s.b1 = c1 / a11;
        s.b2 = 0.0;
    } else if (a22 > 0) {
        s.b2 = c2 / a22;
        s.b1 = 0.0;
    }
    double rss = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const double e = y[i] - s.b1 * x1s[i] - s.b2 * x2s[i];
        rss += w[i] * e * e;
    }
    s.rss = rss;
    return s;
}

ProfiledFit profile_kappa(const std::vector<int>& ts, const std::vector<double>& y,
                          const std::vector<double>& w, const RegressorFn& reg, int grid) {
    if (grid < 3) grid = 3;
    double best_k = 0.0, best_rss = std::numeric_limits<double>::infinity();
    int best_j = 0;
    for (int j = 0; j < grid; ++j) {
        const double k = static_cast<double>(j) / (grid - 1);
        const double rss = solve_linear(ts, y, w, reg, k).rss;
        if (rss < best_rss) {
            best_rss = rss;
            best_k = k;
            best_j = j;
        }
    }
    double lo = std::max(0.0, static_cast<double>(best_j - 1) / (grid - 1));
    double hi = std::min(1.0, static_cast<double>(best_j + 1) / (grid - 1));
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = solve_linear(ts, y, w, reg, x1).rss;
    double f2 = solve_linear(ts, y, w, reg, x2).rss;
    for (int it = 0; it < 100 && (b - a) > 1e-12; ++it) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = solve_linear(ts, y, w, reg, x1).rss;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = solve_linear(ts, y, w, reg, x2).rss;
        }
    }
    const double k_ref = 0.5 * (a + b);
    Subproblem s_ref = solve_linear(ts, y, w, reg, k_ref);
    ProfiledFit out;
    if (s_ref.rss <= best_rss) {
        out.kappa = k_ref;
        out.b1 = s_ref.b1;
        out.b2 = s_ref.b2;
        out.rss = s_ref.rss;
    } else {
        Subproblem s = solve_linear(ts, y, w, reg, best_k);
        out.kappa = best_k;
        out.b1 = s.b1;
        out.b2 = s.b2;
        out.rss = s.rss;
    }
    return out;
}

struct CleanProfile {
    std::vector<int> ts;
    std::vector<double> y;
    std::vector<double> w;
};

CleanProfile clean(const ExperienceEstimates& est, const FitOptions& opts) {
    CleanProfile cp;
    for (const auto& r : est.records) {
        if (!r.ok) continue;
        cp.ts.push_back(r.t);
        cp.y.push_back(r.b_hat);
        double w = 1.0;
        if (opts.inverse_variance_weights && r.se > 0.0) w = 1.0 / (r.se * r.se);
        cp.w.push_back(w);
    }
    return cp;
}

double value_range(const std::vector<double>& y) {
    const auto [mn, mx] = std::minmax_element(y.begin(), y.end());
    return *mx - *mn;
}

double vmean(const std::vector<double>& y) {
    double s = 0.0;
    for (double v : y) s += v;
    return s / static_cast<double>(y.size());
}

void require_three_ts(const CleanProfile& cp, const char* who) {
    std::set<int> uniq(cp.ts.begin(), cp.ts.end());
    if (uniq.size() < 3)
        throw InvalidParameter(std::string(who) + ": need at least 3 distinct experience levels");
}

}  // namespace

MixingFit fit_mixing(const ExperienceEstimates& estimates,
                     const std::vector<double>& lambda_profile, const FitOptions& opts) {
    CleanProfile cp = clean(estimates, opts);
    require_three_ts(cp, "fit_mixing");
    for (int t : cp.ts)
        if (t < 0 || static_cast<std::size_t>(t) >= lambda_profile.size())
            throw InvalidParameter("fit_mixing: lambda profile does not cover all t");

    MixingFit fit;
    fit.lambda_profile = lambda_profile;
    if (value_range(cp.y) < 1e-10) {
        fit.identified = false;
        fit.b0 = fit.b_inf = vmean(cp.y);
        fit.kappa_hat = 0.0;
        fit.rss = 0.0;
        return fit;
    }
    RegressorFn reg = [&lambda_profile](double k, int t, double& x1, double& x2) {
        const double lam = lambda_profile[static_cast<std::size_t>(t)];
        const double th = theta(k, t);
        x1 = lam * th;
        x2 = lam * (1.0 - th);
    };
    ProfiledFit pf = profile_kappa(cp.ts, cp.y, cp.w, reg, opts.kappa_grid);
    fit.b0 = pf.b1;
    fit.b_inf = pf.b2;
    fit.kappa_hat = pf.kappa;
    fit.rss = pf.rss;
    return fit;
}

SequentialFitResult sequential_fit(const ExperienceEstimates& transparent_estimates,
                                   const ExperienceEstimates& hidden_estimates,
                                   const FitOptions& opts) {
    const auto& tr = transparent_estimates.records;
    if (tr.empty() || tr.front().t != 0 || !tr.front().ok)
        throw InvalidParameter("sequential_fit: transparent profile must start at t=0");
    const double b0t = tr.front().b_hat;
    const double guard = std::max(10.0 * tr.front().se, 1e-12);
    if (std::abs(b0t) <= guard)
        throw IdentificationError("sequential_fit: transparent t=0 estimate too close to zero");

    SequentialFitResult out;
    int max_t = 0;
    for (const auto& r : hidden_estimates.records) max_t = std::max(max_t, r.t);
    for (const auto& r : tr) max_t = std::max(max_t, r.t);
    out.lambda_profile.assign(static_cast<std::size_t>(max_t) + 1, 1.0);
    for (const auto& r : tr)
        if (r.ok) out.lambda_profile[static_cast<std::size_t>(r.t)] = r.b_hat / b0t;
    out.lambda_profile[0] = 1.0;
    out.fit = fit_mixing(hidden_estimates, out.lambda_profile, opts);
    return out;
}

JointFitResult joint_fit(const ExperienceEstimates& hidden_estimates,
                         const ExperienceEstimates& transparent_estimates,
                         const FitOptions& opts) {
    CleanProfile h = clean(hidden_estimates, opts);
    CleanProfile tr = clean(transparent_estimates, opts);
    require_three_ts(h, "joint_fit");
    if (h.ts != tr.ts)
        throw InvalidParameter("joint_fit: hidden and transparent profiles must share t grid");
    {
        double amax = 0.0;
        for (double v : tr.y) amax = std::max(amax, std::abs(v));
        if (amax < 1e-12)
            throw IdentificationError("joint_fit: transparent profile is zero; lambda unidentified");
    }
    const std::size_t m = h.ts.size();
    const int T = *std::max_element(h.ts.begin(), h.ts.end());
    std::vector<double> lambda(static_cast<std::size_t>(T) + 1, 1.0);
    // initialize from the transparent ratios when t=0 is usable
    if (h.ts.front() == 0 && std::abs(tr.y.front()) > 1e-12)
        for (std::size_t i = 0; i < m; ++i)
            lambda[static_cast<std::size_t>(h.ts[i])] = tr.y[i] / tr.y.front();
    lambda[0] = 1.0;

    JointFitResult out;
    double prev_rss = std::numeric_limits<double>::infinity();
    double best_rss = std::numeric_limits<double>::infinity();
    std::vector<double> best_lambda = lambda;
    int stall = 0;
    for (int iter = 0; iter < 500; ++iter) {
        out.fit = fit_mixing(hidden_estimates, lambda, opts);
        // transparent level given lambda
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double lam = lambda[static_cast<std::size_t>(tr.ts[i])];
            num += tr.w[i] * lam * tr.y[i];
            den += tr.w[i] * lam * lam;
        }
        out.delta_transparent = den > 0 ? num / den : 0.0;
        // lambda per t given everything else (t = 0 pinned at 1)
        for (std::size_t i = 0; i < m; ++i) {
            const int t = h.ts[i];
            if (t == 0) continue;
            const double th = theta(out.fit.kappa_hat, t);
            const double mt = th * out.fit.b0 + (1.0 - th) * out.fit.b_inf;
            const double dt = out.delta_transparent;
            const double den_t = h.w[i] * mt * mt + tr.w[i] * dt * dt;
            if (den_t < 1e-300)
                throw IdentificationError("joint_fit: lambda unidentified at t=" +
                                          std::to_string(t));
            lambda[static_cast<std::size_t>(t)] =
                (h.w[i] * h.y[i] * mt + tr.w[i] * tr.y[i] * dt) / den_t;
        }
        // pooled rss
        double rss = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const int t = h.ts[i];
            const double lam = lambda[static_cast<std::size_t>(t)];
            const double th = theta(out.fit.kappa_hat, t);
            const double mt = th * out.fit.b0 + (1.0 - th) * out.fit.b_inf;
            const double eh = h.y[i] - lam * mt;
            const double et = tr.y[i] - lam * out.delta_transparent;
            rss += h.w[i] * eh * eh + tr.w[i] * et * et;
        }
        out.iterations = iter + 1;
        if (rss < best_rss - 1e-6 * std::max(1e-12, best_rss)) {
            best_rss = rss;
            best_lambda = lambda;
            stall = 0;
        } else {
            if (rss < best_rss) {
                best_rss = rss;
                best_lambda = lambda;
            }
            ++stall;
        }
        // stop on a converged objective, or on an oscillating one (the inner
        // kappa profiling is grid-quantized, so exact stationarity never hits)
        if (stall >= 10 ||
            (std::isfinite(prev_rss) &&
             std::abs(prev_rss - rss) <= 1e-8 * std::max(1e-12, prev_rss))) {
            out.fit = fit_mixing(hidden_estimates, best_lambda, opts);
            out.fit.rss = best_rss;
            out.lambda_profile = best_lambda;
            double bn = 0.0, bd = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                const double lam = best_lambda[static_cast<std::size_t>(tr.ts[i])];
                bn += tr.w[i] * lam * tr.y[i];
                bd += tr.w[i] * lam * lam;
            }
            out.delta_transparent = bd > 0 ? bn / bd : 0.0;
            return out;
        }
        prev_rss = rss;
    }
    std::ostringstream msg;
    msg << "joint_fit: no convergence after 500 iterations (rss=" << prev_rss
        << ", kappa=" << out.fit.kappa_hat << ", b0=" << out.fit.b0 << ", b_inf=" << out.fit.b_inf
        << ")";
    throw NumericError(msg.str());
}

void ols_speed_fit(OlsPaths& paths, const FitOptions& opts) {
    if (paths.ts.size() < 3)
        throw InvalidParameter("ols_speed_fit: need at least 3 experience levels");
    std::vector<double> w(paths.ts.size(), 1.0);
    RegressorFn reg = [](double k, int t, double& x1, double& x2) {
        const double th = theta(k, t);
        x1 = th;
        x2 = 1.0 - th;
    };
    auto fit_path = [&](const std::vector<double>& y) {
        SpeedFit sf;
        if (value_range(y) < 1e-10) {
            sf.identified = false;
            sf.x0 = sf.x_inf = vmean(y);
            return sf;
        }
        ProfiledFit pf = profile_kappa(paths.ts, y, w, reg, opts.kappa_grid);
        sf.kappa_hat = pf.kappa;
        sf.x0 = pf.b1;
        sf.x_inf = pf.b2;
        sf.rss = pf.rss;
        return sf;
    };
    paths.fit_b = fit_path(paths.b_ols);
    if (!paths.c_ols.empty()) paths.fit_c = fit_path(paths.c_ols);

    // common-kappa fit: pooled rss over both paths at a shared kappa
    if (!paths.c_ols.empty() &&
        (value_range(paths.b_ols) >= 1e-10 || value_range(paths.c_ols) >= 1e-10)) {
        double best_k = 0.0, best_rss = std::numeric_limits<double>::infinity();
        const int grid = std::max(3, opts.kappa_grid);
        auto pooled = [&](double k) {
            return solve_linear(paths.ts, paths.b_ols, w, reg, k).rss +
                   solve_linear(paths.ts, paths.c_ols, w, reg, k).rss;
        };
        int best_j = 0;
        for (int j = 0; j < grid; ++j) {
            const double k = static_cast<double>(j) / (grid - 1);
            const double rss = pooled(k);
            if (rss < best_rss) {
                best_rss = rss;
                best_k = k;
                best_j = j;
            }
        }
        double a = std::max(0.0, static_cast<double>(best_j - 1) / (grid - 1));
        double b = std::min(1.0, static_cast<double>(best_j + 1) / (grid - 1));
        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
        double f1 = pooled(x1), f2 = pooled(x2);
        for (int it = 0; it < 100 && (b - a) > 1e-12; ++it) {
            if (f1 <= f2) {
                b = x2; x2 = x1; f2 = f1;
                x1 = b - gr * (b - a); f1 = pooled(x1);
            } else {
                a = x1; x1 = x2; f1 = f2;
                x2 = a + gr * (b - a); f2 = pooled(x2);
            }
        }
        const double kc = 0.5 * (a + b);
        if (pooled(kc) <= best_rss) {
            paths.kappa_common = kc;
            paths.rss_common = pooled(kc);
        } else {
            paths.kappa_common = best_k;
            paths.rss_common = best_rss;
        }
        paths.common_identified = true;
    } else {
        paths.common_identified = false;
    }
}

PartialIdResult partial_bounds(const ExperienceEstimates& partial_estimates,
                               const FitOptions& opts) {
    CleanProfile cp = clean(partial_estimates, opts);
    require_three_ts(cp, "partial_bounds");
    const int T = *std::max_element(cp.ts.begin(), cp.ts.end());
    std::vector<double> ones(static_cast<std::size_t>(T) + 1, 1.0);
    MixingFit fit = fit_mixing(partial_estimates, ones, opts);
    PartialIdResult out;
    out.lower_bounds = cp.y;
    out.kappa_hat = fit.kappa_hat;
    out.b0 = fit.b0;
    out.b_inf = fit.b_inf;
    out.mode = PartialMode::bounds_only;
    out.identified = fit.identified;
    return out;
}

PartialIdResult partial_point_id(const ExperienceEstimates& hidden_estimates,
                                 const ExperienceEstimates& partial_estimates,
                                 const FitOptions& opts) {
    CleanProfile h = clean(hidden_estimates, opts);
    CleanProfile p = clean(partial_estimates, opts);
    require_three_ts(h, "partial_point_id");
    if (h.ts != p.ts)
        throw InvalidParameter("partial_point_id: profiles must share the t grid");
    if (h.ts.front() != 0)
        throw InvalidParameter("partial_point_id: profiles must include t=0");

    const double se_h0 = hidden_estimates.records.front().se;
    const double se_p0 = partial_estimates.records.front().se;
    const double noise = std::max(2.0 * std::sqrt(se_h0 * se_h0 + se_p0 * se_p0), 1e-12);
    const double gap0 = h.y.front() - p.y.front();

    PartialIdResult out;
    out.mode = PartialMode::point_id_with_hidden;
    out.lower_bounds = p.y;
    out.rho_scaled_gap = gap0;
    if (gap0 < -noise)
        throw IdentificationError(
            "partial_point_id: hidden estimate below partial estimate at t=0; "
            "homogeneity assumption rejected");
    if (std::abs(gap0) <= noise) {
        out.identified = false;  // rho ~ 0: no transparent exposure to exploit
        return out;
    }

    // path_t = (b_h,t - b_p,t)/gap0 estimates theta_t under constant prices,
    // so kappa comes from matching the path to the theta curve directly; the
    // level split (b0, b_inf) then comes from the hidden profile at that kappa.
    std::vector<double> path(h.ts.size());
    for (std::size_t i = 0; i < h.ts.size(); ++i) path[i] = (h.y[i] - p.y[i]) / gap0;
    RegressorFn theta_only = [](double k, int t, double& x1, double& x2) {
        x1 = theta(k, t);
        x2 = 0.0;
    };
    ProfiledFit kfit = profile_kappa(h.ts, path, h.w, theta_only, opts.kappa_grid);
    RegressorFn mix = [](double k, int t, double& x1, double& x2) {
        const double th = theta(k, t);
        x1 = th;
        x2 = 1.0 - th;
    };
    Subproblem levels = solve_linear(h.ts, h.y, h.w, mix, kfit.kappa);
    out.kappa_hat = kfit.kappa;
    out.b0 = levels.b1;
    out.b_inf = levels.b2;
    out.identified = true;
    return out;
}

LateFit late_learning_fit(const ExperienceEstimates& profile,
                          const std::optional<ExperienceEstimates>& transparent_profile,
                          const FitOptions& opts) {
    CleanProfile cp = clean(profile, opts);
    require_three_ts(cp, "late_learning_fit");
    const int T = *std::max_element(cp.ts.begin(), cp.ts.end());

    LateFit out;
    out.late = cp.y;
    out.lambda_profile.assign(static_cast<std::size_t>(T) + 1, 1.0);
    if (transparent_profile) {
        CleanProfile tr = clean(*transparent_profile, opts);
        if (tr.ts.front() != 0 || std::abs(tr.y.front()) < 1e-12)
            throw IdentificationError(
                "late_learning_fit: transparent profile unusable for lambda (t=0 near zero)");
        for (std::size_t i = 0; i < tr.ts.size(); ++i)
            out.lambda_profile[static_cast<std::size_t>(tr.ts[i])] = tr.y[i] / tr.y.front();
        out.lambda_profile[0] = 1.0;
    }

    // flat profile (after removing lambda) => Upsilon_1 = Upsilon_0, kappa unidentified
    std::vector<double> descaled(cp.y.size());
    for (std::size_t i = 0; i < cp.y.size(); ++i)
        descaled[i] = cp.y[i] / out.lambda_profile[static_cast<std::size_t>(cp.ts[i])];
    if (value_range(descaled) < 1e-10) {
        out.identified = false;
        out.Upsilon = vmean(descaled);
        out.Upsilon_gap = 0.0;
        out.kappa_hat = 0.0;
        for (int t = 0; t <= T; ++t) out.theta_path.push_back(1.0);
        return out;
    }

    const auto& lam = out.lambda_profile;
    RegressorFn reg = [&lam](double k, int t, double& x1, double& x2) {
        const double l = lam[static_cast<std::size_t>(t)];
        x1 = l;
        x2 = l * (1.0 - theta(k, t));
    };
    ProfiledFit pf = profile_kappa(cp.ts, cp.y, cp.w, reg, opts.kappa_grid);
    out.kappa_hat = pf.kappa;
    out.Upsilon = pf.b1;
    out.Upsilon_gap = pf.b2;
    for (int t = 0; t <= T; ++t) out.theta_path.push_back(theta(pf.kappa, t));
    return out;
}

}  // namespace elearn
