#pragma once

#include <iosfwd>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "elearn/model_core.hpp"

namespace elearn {

// Internal rate of return of an extra year of schooling: the discount rate r
// equating the present values of the baseline earnings stream and the stream
// scaled by the per-experience proportional returns b_t. Returns beyond the
// estimated horizon use b_limit (the fitted limit return) with unit skill price.
struct IrrInput {
    std::vector<double> profile;   // b_t for t = 0..T_est
    std::vector<double> baseline;  // Wbar(t); empty = flat 1.0, shorter streams extend flat
    int career_length = 40;        // T_irr
    double b_limit = std::numeric_limits<double>::quiet_NaN();  // NaN = last profile value

    double return_at(int t) const;
    double baseline_at(int t) const;
    void validate() const;
};

double irr(const IrrInput& input);

struct SignalingSummary {
    double private_irr = 0.0;
    double social_return = 0.0;  // IRR of the social profile
    double signaling_points = 0.0;
    double signaling_share = 0.0;
};

SignalingSummary signaling_decomposition(const std::vector<double>& private_profile,
                                         const std::vector<double>& social_profile,
                                         const std::vector<double>& baseline = {},
                                         int career_length = 40);

std::vector<double> theta_table(double kappa, const std::vector<int>& ts);

// decomposition CSV (t, private, social, gap, theta) and flat summary document
void write_decomposition_csv(const ReturnsDecomposition& decomposition, std::ostream& os,
                             const std::string& header_comment = "");
std::map<std::string, std::string> signaling_summary_doc(const SignalingSummary& summary);

}  // namespace elearn
