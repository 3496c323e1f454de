#pragma once

#include "ltesim/identity.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace ltesim {

struct Position
{
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Position&) const = default;
};

double distance(const Position& a, const Position& b);

enum class Rat : std::uint8_t
{
    Lte,
    Gsm,
};

struct RadioCell
{
    CellIdentity identity;
    Position position;
    std::int8_t tx_power_dbm = 43; // [-20, 60]
    Rat rat = Rat::Lte;
};

/// Log-distance path loss, no fading. Defaults: exponent 3.5, 20 dB offset,
/// distances clamped to 1 m.
struct PathLossModel
{
    double exponent = 3.5;
    double offset_db = 20.0;
    double min_distance_m = 1.0;
};

double rx_power(const RadioCell& cell, const Position& ue, const PathLossModel& model = {});

struct VisibleCell
{
    const RadioCell* cell = nullptr;
    double rx_dbm = 0.0;
};

/// Cells received at or above floor_dbm, strongest first, ties by ascending cell_id.
std::vector<VisibleCell> visible_cells(std::span<const RadioCell> cells, const Position& ue, double floor_dbm,
                                       const PathLossModel& model = {});

} // namespace ltesim
