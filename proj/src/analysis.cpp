#include "elearn/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "elearn/errors.hpp"

namespace elearn {

double IrrInput::return_at(int t) const {
    if (t < static_cast<int>(profile.size())) return profile[static_cast<std::size_t>(t)];
    if (std::isnan(b_limit)) return profile.back();
    return b_limit;
}

double IrrInput::baseline_at(int t) const {
    if (baseline.empty()) return 1.0;
    if (t < static_cast<int>(baseline.size())) return baseline[static_cast<std::size_t>(t)];
    return baseline.back();
}

void IrrInput::validate() const {
    if (profile.empty()) throw InvalidParameter("irr: empty return profile");
    if (career_length + 1 < static_cast<int>(profile.size()))
        throw InvalidParameter("irr: career length shorter than the estimated profile");
    for (double b : profile)
        if (!std::isfinite(b)) throw InvalidParameter("irr: non-finite return");
    for (int t = 0; t <= career_length; ++t)
        if (!(baseline_at(t) > 0.0)) throw InvalidParameter("irr: baseline wages must be positive");
}

namespace {

// PV difference between the schooled stream (shifted one period, scaled by
// 1+b_t) and the baseline stream.
double pv_difference(const IrrInput& in, double r) {
    double f = 0.0;
    double disc = 1.0;  // (1+r)^-t
    const double inv = 1.0 / (1.0 + r);
    for (int t = 0; t <= in.career_length; ++t) {
        const double w = in.baseline_at(t);
        f += w * (1.0 + in.return_at(t)) * disc * inv - w * disc;
        disc *= inv;
    }
    return f;
}

}  // namespace

double irr(const IrrInput& input) {
    input.validate();
    double lo = -0.99, hi = 1.0;
    double flo = pv_difference(input, lo);
    double fhi = pv_difference(input, hi);
    double wsum = 0.0;
    for (int t = 0; t <= input.career_length; ++t) wsum += input.baseline_at(t);
    const double ftol = 1e-12 * wsum;
    if (std::abs(flo) < ftol) return lo;
    if (std::abs(fhi) < ftol) return hi;
    if (flo * fhi > 0.0)
        throw NumericError("irr: no sign change of the PV difference on (-0.99, 1.0)");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = pv_difference(input, mid);
        if (std::abs(fm) < ftol && hi - lo < 1e-13) return mid;
        if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-15) break;
    }
    return 0.5 * (lo + hi);
}

SignalingSummary signaling_decomposition(const std::vector<double>& private_profile,
                                         const std::vector<double>& social_profile,
                                         const std::vector<double>& baseline, int career_length) {
    if (private_profile.size() != social_profile.size())
        throw InvalidParameter("signaling_decomposition: profiles must share the t grid");
    IrrInput pin{private_profile, baseline, career_length,
                 std::numeric_limits<double>::quiet_NaN()};
    IrrInput soc{social_profile, baseline, career_length,
                 std::numeric_limits<double>::quiet_NaN()};
    SignalingSummary out;
    out.private_irr = irr(pin);
    out.social_return = irr(soc);
    out.signaling_points = out.private_irr - out.social_return;
    if (std::abs(out.private_irr) < 1e-12)
        throw NumericError("signaling_decomposition: zero private IRR, share undefined");
    out.signaling_share = 1.0 - out.social_return / out.private_irr;
    return out;
}

std::vector<double> theta_table(double kappa, const std::vector<int>& ts) {
    std::vector<double> out;
    out.reserve(ts.size());
    for (int t : ts) out.push_back(theta(kappa, t));
    return out;
}

void write_decomposition_csv(const ReturnsDecomposition& decomposition, std::ostream& os,
                             const std::string& header_comment) {
    if (!header_comment.empty()) os << "# " << header_comment << "\n";
    os << "t,private,social,gap,theta\n";
    char buf[128];
    for (const auto& r : decomposition.records) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g", r.t, r.private_, r.social,
                      r.signaling_gap, r.theta);
        os << buf << '\n';
    }
}

std::map<std::string, std::string> signaling_summary_doc(const SignalingSummary& summary) {
    char buf[64];
    std::map<std::string, std::string> out;
    auto put = [&](const char* key, double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out[key] = buf;
    };
    put("private_irr", summary.private_irr);
    put("social_return", summary.social_return);
    put("signaling_points", summary.signaling_points);
    put("signaling_share", summary.signaling_share);
    return out;
}

}  // namespace elearn
