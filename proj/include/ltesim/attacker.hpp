#pragma once

#include "ltesim/capture_json.hpp"
#include "ltesim/codec.hpp"
#include "ltesim/identity.hpp"
#include "ltesim/network_core.hpp"
#include "ltesim/radio.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ltesim {

enum class RogueMode : std::uint8_t
{
    ImsiCatcher,
    AttachRejectDos,
    TauRejectDos,
    Downgrade,
};

std::string_view rogue_mode_name(RogueMode m);
std::optional<RogueMode> rogue_mode_from_name(std::string_view name);

struct RogueConfig
{
    CellIdentity spoofed;
    /// Advertised in the rogue SIB1 on top of the copied priority list.
    std::optional<EarfcnPriority> injection;
    std::vector<EarfcnPriority> priority_earfcns;
    RogueMode mode = RogueMode::ImsiCatcher;
    EmmCause cause = EmmCause::PlmnNotAllowed; // the DoS modes
    std::int8_t tx_power_dbm = 43;
    Position position;
    std::int8_t min_rx_level_dbm = -120;
    std::uint64_t broadcast_period_ms = 80;
    std::uint64_t active_from_ms = 0;
    std::optional<std::uint64_t> active_until_ms;
};

nlohmann::json rogue_config_to_json(const RogueConfig& cfg);

struct CatcherEntry
{
    std::uint64_t timestamp_ms = 0;
    Imsi imsi;
    Rnti rnti;
    std::uint32_t cell_id = 0;
};

/// Append-only record of disclosed IMSIs.
class CatcherLog
{
public:
    void append(CatcherEntry e) { entries_.push_back(std::move(e)); }
    const std::vector<CatcherEntry>& entries() const noexcept { return entries_; }
    bool contains(const Imsi& imsi) const;
    /// One JSON object per line: {"t","imsi","rnti","cell"}.
    std::string to_jsonl() const;

private:
    std::vector<CatcherEntry> entries_;
};

class NoBroadcastFound : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Draft a rogue configuration from passively captured broadcasts. The
/// strongest cell seen with both MIB and SIB1 is cloned: same PLMN and priority
/// list, TAC + 1, the first unobserved cell id after it, and its highest
/// priority frequency as the injection. Throws NoBroadcastFound.
RogueConfig scan_broadcast(std::span<const CaptureRecord> captured);

/// A rogue eNodeB. It has no HSS access, so it never authenticates anyone and
/// never sends a protected frame.
class RogueCell
{
public:
    RogueCell(RogueConfig cfg, std::uint64_t seed);

    const RogueConfig& config() const noexcept { return cfg_; }
    const RadioCell& radio() const noexcept { return radio_; }
    bool active(std::uint64_t now_ms) const;

    void tick(std::uint64_t now_ms, std::vector<OutFrame>& out);
    void handle_uplink(const DecodeResult& frame, std::uint64_t now_ms, std::vector<OutFrame>& out);

    msg::Sib1 sib1() const;
    const CatcherLog& log() const noexcept { return log_; }
    std::size_t live_sessions() const noexcept { return sessions_.size(); }

private:
    struct Session
    {
        Rnti rnti;
        std::uint64_t since_ms = 0;
        bool tau = false;
        bool logged = false;
    };

    void release(std::uint16_t rnti);
    void release_with(Session& s, EmmCause cause, std::vector<OutFrame>& out);
    void record(Session& s, const Imsi& imsi, std::uint64_t now_ms);

    RogueConfig cfg_;
    RadioCell radio_;
    RntiAllocator rntis_;
    Rng rng_;
    std::map<std::uint16_t, Session> sessions_;
    CatcherLog log_;
};

} // namespace ltesim
