#pragma once

#include "ltesim/codec.hpp"
#include "ltesim/identity.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace ltesim {

struct TrajectoryEntry
{
    std::uint32_t cell_id = 0;
    Rnti rnti;
    std::uint64_t enter_ms = 0;
    bool operator==(const TrajectoryEntry&) const = default;
};

using SessionKey = std::pair<std::uint32_t, std::uint16_t>; // (cell_id, rnti)

struct TrackedSession
{
    std::uint64_t id = 0;
    std::uint32_t cell_id = 0; // current key
    Rnti rnti;
    std::optional<Tmsi> bound_tmsi;
    std::optional<Msisdn> bound_msisdn;
    std::uint64_t first_seen_ms = 0;
    std::uint64_t last_seen_ms = 0;
    std::uint64_t ul_bytes = 0;
    std::uint64_t dl_bytes = 0;
    std::vector<TrajectoryEntry> trajectory;
    /// Every (cell, rnti) this session was seen under, temporary ones included.
    std::vector<SessionKey> keys;

    /// Time spent per cell, from trajectory entry to the next (or last_seen).
    std::map<std::uint32_t, std::uint64_t> dwell_ms() const;
};

struct PendingHandover
{
    std::uint64_t session = 0;
    SessionKey from;
    std::uint32_t target_cell = 0;
    Rnti expected_rnti;
    std::uint64_t issued_ms = 0;
};

struct SnifferConfig
{
    std::uint64_t handover_window_ms = 1000;
    std::uint64_t paging_window_ms = 500;
};

struct SnifferStats
{
    std::uint64_t frames = 0;
    std::uint64_t opaque_frames = 0;
    std::uint64_t undecodable_frames = 0;
    std::uint64_t attributed_bytes = 0;
    std::uint64_t handovers_followed = 0;
    std::uint64_t handovers_expired = 0;
};

inline constexpr int kTrackingReportSchemaVersion = 1;

/// Passive observer. Holds no keys and has no way to transmit: every
/// operation only consumes frames.
class Sniffer
{
public:
    explicit Sniffer(SnifferConfig cfg = {}) : cfg_(cfg) {}

    void observe(std::span<const std::uint8_t> frame);

    /// The attacker's own mobile-terminated probe (e.g. a silent SMS) sent to
    /// a known phone number at t.
    void add_probe(const Msisdn& msisdn, std::uint64_t t_ms);

    /// Bind TMSIs to sessions via paging followed by exactly one random access
    /// at the same cell within the window; never binds ambiguously.
    void correlate_paging(std::uint64_t window_ms);

    /// Tracking report as a versioned JSON document.
    nlohmann::json report(std::uint64_t now_ms) const;

    /// correlate_paging with the configured window, then report at the last
    /// observed timestamp.
    nlohmann::json finalize_report();

    const std::map<std::uint64_t, TrackedSession>& sessions() const noexcept { return sessions_; }
    const std::vector<PendingHandover>& pending() const noexcept { return pending_; }
    const SnifferStats& stats() const noexcept { return stats_; }
    std::uint64_t last_observed_ms() const noexcept { return last_observed_; }

private:
    struct PagingEvent
    {
        std::uint64_t t_ms;
        std::uint32_t cell_id;
        Tmsi tmsi;
    };
    struct RarEvent
    {
        std::uint64_t t_ms;
        std::uint32_t cell_id;
        Rnti rnti;
    };
    struct Probe
    {
        std::uint64_t t_ms;
        Msisdn msisdn;
    };

    TrackedSession& create(SessionKey key, std::uint64_t t);
    void follow(PendingHandover p, SessionKey new_key, std::uint64_t t);
    void merge_into(std::uint64_t target, std::uint64_t source);

    SnifferConfig cfg_;
    std::map<std::uint64_t, TrackedSession> sessions_;
    std::map<SessionKey, std::uint64_t> index_;
    std::vector<PendingHandover> pending_;
    std::vector<PagingEvent> pagings_;
    std::vector<RarEvent> rars_;
    std::vector<Probe> probes_;
    SnifferStats stats_;
    std::uint64_t next_id_ = 1;
    std::uint64_t last_observed_ = 0;
};

} // namespace ltesim
