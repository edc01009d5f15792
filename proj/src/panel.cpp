#include "elearn/panel.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "elearn/errors.hpp"

namespace elearn {

namespace {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

void write_panel_csv(const Panel& panel, std::ostream& os, const std::string& header_comment) {
    if (!header_comment.empty()) os << "# " << header_comment << "\n";
    os << "worker_id,t," << (panel.wage_is_level ? "wage_level" : "ln_wage")
       << ",S,D,Z,Q,group_cohort,group_region\n";
    const bool z = panel.has_z(), q = panel.has_q();
    const bool groups = !panel.group_cohort.empty();
    for (std::size_t w = 0; w < panel.n_workers(); ++w) {
        for (int t = 0; t <= panel.horizon; ++t) {
            os << panel.worker_id[w] << ',' << t << ',' << fmt(panel.wage[panel.idx(w, t)]) << ','
               << fmt(panel.S[w]) << ',' << fmt(panel.D[w]) << ',';
            if (z) os << fmt(panel.Z[w]);
            os << ',';
            if (q) os << fmt(panel.Q[w]);
            os << ',';
            if (groups) os << panel.group_cohort[w];
            os << ',';
            if (groups) os << panel.group_region[w];
            os << '\n';
        }
    }
}

Panel read_panel_csv(std::istream& is) {
    Panel panel;
    std::string line;
    bool header_seen = false;
    bool z_present = false, q_present = false, groups_present = false;
    std::uint64_t last_id = 0;
    bool any = false;
    int max_t = 0;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            auto cols = split_csv(line);
            if (cols.size() != 9 || cols[0] != "worker_id")
                throw ConfigError("panel CSV: unexpected header: " + line);
            panel.wage_is_level = (cols[2] == "wage_level");
            header_seen = true;
            continue;
        }
        auto f = split_csv(line);
        if (f.size() != 9) throw ConfigError("panel CSV: bad field count in line: " + line);
        const std::uint64_t id = std::stoull(f[0]);
        const int t = std::stoi(f[1]);
        if (!any || id != last_id) {
            panel.worker_id.push_back(id);
            panel.S.push_back(std::stod(f[3]));
            panel.D.push_back(std::stod(f[4]));
            if (!f[5].empty()) {
                z_present = true;
                panel.Z.push_back(std::stod(f[5]));
            }
            if (!f[6].empty()) {
                q_present = true;
                panel.Q.push_back(std::stod(f[6]));
            }
            if (!f[7].empty()) {
                groups_present = true;
                panel.group_cohort.push_back(std::stoi(f[7]));
                panel.group_region.push_back(std::stoi(f[8]));
            }
            last_id = id;
            any = true;
        }
        if (t > max_t) max_t = t;
        panel.wage.push_back(std::stod(f[2]));
    }
    if (!any) throw ConfigError("panel CSV: no records");
    panel.horizon = max_t;
    if (z_present && panel.Z.size() != panel.worker_id.size())
        throw ConfigError("panel CSV: Z present for only some workers");
    if (q_present && panel.Q.size() != panel.worker_id.size())
        throw ConfigError("panel CSV: Q present for only some workers");
    if (groups_present && panel.group_cohort.size() != panel.worker_id.size())
        throw ConfigError("panel CSV: group ids present for only some workers");
    if (panel.wage.size() != panel.n_workers() * panel.periods())
        throw ConfigError("panel CSV: panel is not balanced");
    return panel;
}

}  // namespace elearn
