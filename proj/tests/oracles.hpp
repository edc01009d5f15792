#pragma once

// Independent reference implementations the library is tested against. These
// deliberately use different algorithms from the production code: direct
// joint-Gaussian conditioning, raw-loop covariances, grid-scan root finding,
// and exhaustive enumeration.

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "elearn/config.hpp"
#include "elearn/model_core.hpp"

namespace oracles {

// Posterior mean of A from explicit joint-Gaussian conditioning of A on t
// signals xi_i = A + eps_i, with A ~ N(prior_mean, sigma0_sq).
inline double gaussian_posterior_mean(double prior_mean, const std::vector<double>& signals,
                                      double sigma0_sq, double sigma_eps_sq) {
    const int t = static_cast<int>(signals.size());
    if (t == 0) return prior_mean;
    Eigen::MatrixXd cov(t, t);
    Eigen::VectorXd cav(t), dev(t);
    for (int i = 0; i < t; ++i) {
        for (int j = 0; j < t; ++j) cov(i, j) = sigma0_sq + (i == j ? sigma_eps_sq : 0.0);
        cav(i) = sigma0_sq;
        dev(i) = signals[static_cast<std::size_t>(i)] - prior_mean;
    }
    return prior_mean + cav.dot(cov.ldlt().solve(dev));
}

// One-signal-at-a-time conjugate-normal updating.
inline double sequential_posterior_mean(double prior_mean, const std::vector<double>& signals,
                                        double sigma0_sq, double sigma_eps_sq) {
    double m = prior_mean, v = sigma0_sq;
    for (double xi : signals) {
        const double w = v / (v + sigma_eps_sq);
        m = m + w * (xi - m);
        v = v * sigma_eps_sq / (v + sigma_eps_sq);
    }
    return m;
}

// Sample OLS slopes of y on X (with intercept), raw normal equations.
inline Eigen::VectorXd ols_slopes(const std::vector<double>& y,
                                  const std::vector<std::vector<double>>& xs) {
    const int n = static_cast<int>(y.size());
    const int k = static_cast<int>(xs.size()) + 1;
    Eigen::MatrixXd X(n, k);
    Eigen::VectorXd Y(n);
    for (int i = 0; i < n; ++i) {
        X(i, 0) = 1.0;
        for (int j = 1; j < k; ++j) X(i, j) = xs[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(i)];
        Y(i) = y[static_cast<std::size_t>(i)];
    }
    return (X.transpose() * X).ldlt().solve(X.transpose() * Y);
}

// Raw-loop covariance (two-pass).
inline double cov_raw(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(y.size());
    double s = 0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mx) * (y[i] - my);
    return s / static_cast<double>(x.size());
}

// Grid-scan + bisection root of the PV difference, written independently of
// the production bisection (different bracketing and evaluation order).
inline double irr_scan(const std::vector<double>& profile, const std::vector<double>& wbar,
                       int career) {
    auto b_at = [&](int t) {
        return t < static_cast<int>(profile.size()) ? profile[static_cast<std::size_t>(t)]
                                                    : profile.back();
    };
    auto w_at = [&](int t) {
        if (wbar.empty()) return 1.0;
        return t < static_cast<int>(wbar.size()) ? wbar[static_cast<std::size_t>(t)] : wbar.back();
    };
    auto f = [&](double r) {
        double acc = 0.0;
        for (int t = 0; t <= career; ++t)
            acc += w_at(t) * (1.0 + b_at(t)) * std::pow(1.0 + r, -(t + 1)) -
                   w_at(t) * std::pow(1.0 + r, -t);
        return acc;
    };
    double prev_r = -0.98, prev_f = f(prev_r);
    for (int i = 1; i <= 1980; ++i) {
        const double r = -0.98 + 0.001 * i;
        const double fr = f(r);
        if (prev_f == 0.0) return prev_r;
        if (prev_f * fr < 0.0) {
            double lo = prev_r, hi = r, flo = prev_f;
            for (int it = 0; it < 120; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double fm = f(mid);
                if ((fm < 0) == (flo < 0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            return 0.5 * (lo + hi);
        }
        prev_r = r;
        prev_f = fr;
    }
    throw std::runtime_error("irr_scan: no root found");
}

// Default generating process used across tests: constant skill prices,
// first stage 0.237, kappa 0.505, initial return 0.198, limit return 0.055.
inline elearn::ExperimentConfig default_config(int horizon = 30) {
    elearn::ExperimentConfig cfg;
    cfg.horizon = horizon;
    return cfg;
}

inline elearn::StructuralParams default_structure(int horizon = 30) {
    return default_config(horizon).structural();
}

}  // namespace oracles
