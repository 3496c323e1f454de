#include "ltesim/radio.hpp"

#include <algorithm>
#include <cmath>

namespace ltesim {

double distance(const Position& a, const Position& b)
{
    return std::hypot(a.x - b.x, a.y - b.y);
}

double rx_power(const RadioCell& cell, const Position& ue, const PathLossModel& model)
{
    double d = std::max(distance(cell.position, ue), model.min_distance_m);
    return static_cast<double>(cell.tx_power_dbm) - 10.0 * model.exponent * std::log10(d) - model.offset_db;
}

std::vector<VisibleCell> visible_cells(std::span<const RadioCell> cells, const Position& ue, double floor_dbm,
                                       const PathLossModel& model)
{
    std::vector<VisibleCell> out;
    for (const auto& c : cells) {
        double rx = rx_power(c, ue, model);
        if (rx >= floor_dbm) {
            out.push_back({&c, rx});
        }
    }
    std::sort(out.begin(), out.end(), [](const VisibleCell& a, const VisibleCell& b) {
        if (a.rx_dbm != b.rx_dbm) {
            return a.rx_dbm > b.rx_dbm;
        }
        return a.cell->identity.cell_id < b.cell->identity.cell_id;
    });
    return out;
}

} // namespace ltesim
