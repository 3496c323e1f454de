#pragma once

#include "ltesim/simulator.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ltesim {

/// How well the sniffer's report reconstructs one UE.
struct UeTrackingMetrics
{
    std::string imsi;
    /// Report sessions sharing a (cell, rnti) with the UE while it held it.
    std::vector<std::uint64_t> sessions;
    std::size_t true_visits = 0;
    /// Longest run of consecutive true visits any single session reproduces,
    /// over the number of true visits. Absent when the UE never held an RNTI.
    std::optional<double> continuity;
    /// Sum over cells of |true dwell - dwell of the best-matching session|.
    std::uint64_t dwell_error_ms = 0;
    /// |true bytes - bytes of all attributed sessions|.
    std::uint64_t byte_error = 0;
};

struct TrackingMetrics
{
    std::vector<UeTrackingMetrics> ues;

    /// Mean continuity over UEs that have one.
    std::optional<double> mean_continuity() const;
    nlohmann::json to_json() const;
};

/// Compare a tracking report against ground truth. Returns nothing when there
/// is no report (sniffer disabled).
std::optional<TrackingMetrics> diff_tracking(const GroundTruth& truth, const std::optional<nlohmann::json>& report);

} // namespace ltesim
