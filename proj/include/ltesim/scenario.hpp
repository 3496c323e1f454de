#pragma once

#include "ltesim/attacker.hpp"
#include "ltesim/network_core.hpp"
#include "ltesim/radio.hpp"
#include "ltesim/ue_stack.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ltesim {

/// Scenario rejected during validation; `path` names the offending field,
/// e.g. "ues[2].waypoints[1].t".
class ScenarioInvalid : public std::runtime_error
{
public:
    ScenarioInvalid(std::string path, const std::string& message)
        : std::runtime_error(path + ": " + message), path_(std::move(path))
    {
    }
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

struct Waypoint
{
    std::uint64_t t_ms = 0;
    Position position;
};

struct TrafficItem
{
    std::uint64_t t_ms = 0;
    std::uint16_t byte_count = 0;
    Direction direction = Direction::Uplink;
};

enum class DirectiveKind : std::uint8_t
{
    EraseTmsi,
    AirplaneToggle,
    Page,
};

struct Directive
{
    DirectiveKind kind = DirectiveKind::EraseTmsi;
    std::uint64_t t_ms = 0;
    std::optional<Msisdn> msisdn; // Page only
};

struct UeSpec
{
    UeConfig config;
    Position position;
    std::vector<Waypoint> waypoints; // sorted by t_ms
    std::vector<TrafficItem> traffic; // sorted by t_ms
    std::vector<Directive> directives; // sorted by t_ms
    std::uint64_t power_on_ms = 0;
    std::optional<Tmsi> initial_tmsi;
};

struct GsmCellSpec
{
    RadioCell cell;
    bool rogue = false;
};

struct SnifferSpec
{
    bool enabled = true;
    Position position;
};

struct Scenario
{
    std::uint64_t seed = 0;
    std::uint64_t duration_ms = 0;
    int mnc_length = 2;
    PathLossModel path_loss;
    double floor_dbm = -120.0;
    std::vector<CellConfig> cells;
    std::vector<GsmCellSpec> gsm_cells;
    std::vector<UeSpec> ues;
    std::vector<HssRecord> hss;
    std::optional<RogueConfig> rogue;
    SnifferSpec sniffer;
};

/// Parse and validate. Throws ScenarioInvalid.
Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::string& path);

/// Position along the waypoint path at t (linear; the initial position
/// anchors t = 0).
Position position_at(const UeSpec& ue, std::uint64_t t_ms);

} // namespace ltesim
