#include "ltesim/tracking_diff.hpp"

#include <algorithm>
#include <map>

namespace ltesim {

namespace {

using nlohmann::json;
using Step = std::pair<std::uint32_t, std::uint16_t>;

struct ReportSession
{
    std::uint64_t id = 0;
    std::uint64_t first_seen = 0;
    std::uint64_t last_seen = 0;
    std::uint64_t bytes = 0;
    std::vector<Step> trajectory;
    std::vector<Step> keys;
    std::map<std::uint32_t, std::uint64_t> dwell;
};

Step step_of(const json& j)
{
    return {j.at("cell").get<std::uint32_t>(), parse_rnti_hex(j.at("rnti").get<std::string>()).value};
}

std::vector<ReportSession> sessions_of(const json& report)
{
    std::vector<ReportSession> out;
    for (const auto& s : report.at("sessions")) {
        ReportSession r;
        r.id = s.at("id").get<std::uint64_t>();
        r.first_seen = s.at("first_seen_ms").get<std::uint64_t>();
        r.last_seen = s.at("last_seen_ms").get<std::uint64_t>();
        r.bytes = s.at("ul_bytes").get<std::uint64_t>() + s.at("dl_bytes").get<std::uint64_t>();
        for (const auto& e : s.at("trajectory")) {
            r.trajectory.push_back(step_of(e));
        }
        for (const auto& k : s.at("keys")) {
            r.keys.push_back(step_of(k));
        }
        for (const auto& d : s.at("dwell")) {
            r.dwell[d.at("cell").get<std::uint32_t>()] = d.at("ms").get<std::uint64_t>();
        }
        out.push_back(std::move(r));
    }
    return out;
}

bool attributed(const ReportSession& s, const UeTruth& ue)
{
    return std::any_of(ue.epochs.begin(), ue.epochs.end(), [&](const TruthEpoch& e) {
        const Step key{e.cell_id, e.rnti.value};
        return s.first_seen <= e.end_ms && e.start_ms <= s.last_seen &&
               std::find(s.keys.begin(), s.keys.end(), key) != s.keys.end();
    });
}

/// Length of the longest common contiguous run of a and b.
std::size_t longest_common_run(const std::vector<Step>& a, const std::vector<Step>& b)
{
    std::size_t best = 0;
    std::vector<std::size_t> prev(b.size() + 1, 0);
    std::vector<std::size_t> cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : 0;
            best = std::max(best, cur[j]);
        }
        std::swap(prev, cur);
    }
    return best;
}

std::uint64_t abs_diff(std::uint64_t a, std::uint64_t b)
{
    return a > b ? a - b : b - a;
}

} // namespace

std::optional<double> TrackingMetrics::mean_continuity() const
{
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& u : ues) {
        if (u.continuity) {
            sum += *u.continuity;
            ++n;
        }
    }
    return n == 0 ? std::nullopt : std::optional<double>(sum / static_cast<double>(n));
}

json TrackingMetrics::to_json() const
{
    json list = json::array();
    for (const auto& u : ues) {
        list.push_back({
            {"imsi", u.imsi},
            {"sessions", u.sessions},
            {"true_visits", u.true_visits},
            {"continuity", u.continuity ? json(*u.continuity) : json(nullptr)},
            {"dwell_error_ms", u.dwell_error_ms},
            {"byte_error", u.byte_error},
        });
    }
    auto mean = mean_continuity();
    return {{"ues", std::move(list)}, {"mean_continuity", mean ? json(*mean) : json(nullptr)}};
}

std::optional<TrackingMetrics> diff_tracking(const GroundTruth& truth, const std::optional<json>& report)
{
    if (!report) {
        return std::nullopt;
    }
    const auto sessions = sessions_of(*report);
    TrackingMetrics metrics;
    for (const auto& ue : truth.ues) {
        UeTrackingMetrics m;
        m.imsi = ue.imsi;
        m.true_visits = ue.visits.size();
        std::vector<Step> visits;
        for (const auto& v : ue.visits) {
            visits.push_back({v.cell_id, v.rnti.value});
        }

        std::uint64_t bytes = 0;
        std::size_t best_run = 0;
        const ReportSession* best = nullptr;
        for (const auto& s : sessions) {
            if (!attributed(s, ue)) {
                continue;
            }
            m.sessions.push_back(s.id);
            bytes += s.bytes;
            const auto run = longest_common_run(s.trajectory, visits);
            if (best == nullptr || run > best_run) {
                best = &s;
                best_run = run;
            }
        }
        if (!visits.empty()) {
            m.continuity = static_cast<double>(best_run) / static_cast<double>(visits.size());
        }
        m.byte_error = abs_diff(ue.ul_bytes + ue.dl_bytes, bytes);

        auto true_dwell = ue.dwell_ms(truth.end_ms);
        std::map<std::uint32_t, std::uint64_t> seen;
        if (best != nullptr) {
            seen = best->dwell;
        }
        for (const auto& [cell, ms] : true_dwell) {
            m.dwell_error_ms += abs_diff(ms, seen.contains(cell) ? seen.at(cell) : 0);
        }
        for (const auto& [cell, ms] : seen) {
            if (!true_dwell.contains(cell)) {
                m.dwell_error_ms += ms;
            }
        }
        metrics.ues.push_back(std::move(m));
    }
    return metrics;
}

} // namespace ltesim
