#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace elearn {

// Balanced worker-by-experience panel, stored worker-major: record (w, t)
// lives at index w*(T+1)+t. Worker-level columns (schooling, instrument,
// correlates, group ids) are stored once per worker.
struct Panel {
    int horizon = 0;
    bool wage_is_level = false;  // true for the binary-schooling potential-outcomes variant

    std::vector<std::uint64_t> worker_id;
    std::vector<double> S;
    std::vector<double> S_raw;  // original continuous schooling when discretized, else empty
    std::vector<double> D;
    std::vector<double> Z;  // empty when the hidden correlate is disabled
    std::vector<double> Q;  // empty when the observed correlate is disabled
    std::vector<int> group_cohort;
    std::vector<int> group_region;

    std::vector<double> wage;    // ln W_it (or level), n*(T+1)
    std::vector<double> signal;  // xi_it, kept in memory for oracle tests only

    std::size_t n_workers() const { return worker_id.size(); }
    std::size_t periods() const { return static_cast<std::size_t>(horizon) + 1; }
    std::size_t idx(std::size_t w, int t) const { return w * periods() + static_cast<std::size_t>(t); }
    bool has_z() const { return !Z.empty(); }
    bool has_q() const { return !Q.empty(); }
};

// CSV schema: worker_id,t,<wage col>,S,D,Z,Q,group_cohort,group_region with
// empty fields for missing optional columns. Lines starting with '#' are
// header comments (config hash etc.) and are skipped on read.
void write_panel_csv(const Panel& panel, std::ostream& os, const std::string& header_comment = "");
Panel read_panel_csv(std::istream& is);

}  // namespace elearn
