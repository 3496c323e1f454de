#pragma once

#include "ltesim/codec.hpp"
#include "ltesim/identity.hpp"
#include "ltesim/keyed_stub.hpp"
#include "ltesim/radio.hpp"
#include "ltesim/rng.hpp"

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ltesim {

struct CellConfig
{
    RadioCell radio; // radio.identity is the cell identity
    std::uint64_t broadcast_period_ms = 80;
    bool encrypt_handover_trigger = false;
    bool rnti_refresh_on_idle = false;
    double handover_hysteresis_db = 3.0;
    std::int8_t min_rx_level_dbm = -120;
    std::vector<EarfcnPriority> priority_earfcns;
    std::uint8_t bandwidth_rb = 50;
    /// RNTIs handed out before any random draw, in order.
    std::deque<Rnti> forced_rntis;

    const CellIdentity& identity() const { return radio.identity; }
};

struct HssRecord
{
    Imsi imsi;
    SubscriberKey key{};
    Msisdn msisdn;
};

enum class SessionState : std::uint8_t
{
    RachDone,
    Attaching,
    Authenticated,
    Secured,
    Registered,
    Idle,
};

std::string_view session_state_name(SessionState s);

struct SessionRecord
{
    std::uint64_t id = 0;
    std::uint32_t cell_id = 0;
    Rnti rnti;
    /// Temporary RNTI still accepted after a re-key, until the UE shows up on `rnti`.
    std::optional<Rnti> alias;
    std::optional<Imsi> imsi;
    std::optional<Tmsi> tmsi;
    std::optional<std::uint32_t> key_id;
    SessionState state = SessionState::RachDone;
    std::uint64_t state_since_ms = 0;
    Challenge rand{};
    /// Set once SecurityModeComplete is seen (or the context is resumed).
    bool secured = false;
    bool tau_pending = false;
    std::optional<MobilityControlInfo> pending_handover;
    std::uint64_t handover_issued_ms = 0;
};

class UnknownSubscriber : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Thrown when the core catches itself breaking one of its own invariants.
class CoreInvariantViolation : public std::logic_error
{
public:
    using std::logic_error::logic_error;
};

/// A downlink frame ready for transmission; the harness stamps the timestamp.
struct OutFrame
{
    std::uint32_t cell_id = 0;
    Rnti rnti;
    Protection protection = Cleartext{};
    Message message;
    /// Addressed to whichever UE sent the uplink that caused it.
    bool reply = false;
};

/// Mib then Sib1 when now is a multiple of the broadcast period.
std::vector<OutFrame> broadcast_tick(const CellConfig& cfg, std::uint64_t now_ms);

/// Strongest reported neighbour among `candidates` if it beats the serving
/// cell's report by at least the hysteresis.
std::optional<NeighborMeasurement> handover_candidate(std::uint32_t serving_cell, const msg::MeasurementReport& report,
                                                      double hysteresis_db,
                                                      const std::vector<std::uint32_t>& candidates);

struct CoreTimers
{
    std::uint64_t inactivity_ms = 5000;
    std::uint64_t procedure_timeout_ms = 2000;
    std::uint64_t handover_timeout_ms = 2000;
};

/// Legitimate eNodeBs of one operator plus a single MME/HSS.
class NetworkCore
{
public:
    struct Subscriber
    {
        explicit Subscriber(HssRecord h) : hss(std::move(h)) {}

        HssRecord hss;
        std::optional<Tmsi> tmsi;
        std::optional<std::uint32_t> key_id;
        std::uint64_t keystream_seed = 0;
        std::optional<std::uint16_t> tac;
        std::optional<std::uint64_t> session;
        /// (cell, rnti) held before the last idle transition.
        std::optional<std::pair<std::uint32_t, Rnti>> prior;
        std::uint64_t last_activity_ms = 0;
        std::deque<std::uint16_t> dl_buffer;
    };

    NetworkCore(std::vector<CellConfig> cells, std::vector<HssRecord> hss, std::uint64_t seed,
                CoreTimers timers = {});

    /// Pre-provision a TMSI, as if from an earlier registration.
    void assign_tmsi(const Imsi& imsi, Tmsi tmsi);

    bool owns_cell(std::uint32_t cell_id) const { return cells_.contains(cell_id); }
    const CellConfig& cell(std::uint32_t cell_id) const { return cells_.at(cell_id).cfg; }
    std::vector<std::uint32_t> cell_ids() const;

    /// Broadcasts, idle transitions and procedure timeouts due at now.
    void tick(std::uint64_t now_ms, std::vector<OutFrame>& out);

    /// Process one uplink frame received at now. Replies go out on the next tick.
    void handle_uplink(const DecodeResult& frame, std::uint64_t now_ms, std::vector<OutFrame>& out);

    /// Paging in the subscriber's last known tracking area.
    /// Throws UnknownSubscriber if the MSISDN is not provisioned or never attached.
    std::vector<OutFrame> page(const Msisdn& msisdn) const;

    /// Mobile-terminated data: sent at once when connected, otherwise buffered and paged.
    void deliver_downlink(const Msisdn& msisdn, std::uint16_t byte_count, std::uint64_t now_ms,
                          std::vector<OutFrame>& out);

    /// Registered -> Idle: release the RNTI and remember it for the next resume.
    void idle_transition(std::uint64_t session_id);

    const KeyTable& key_table() const { return keys_; }
    std::optional<std::uint64_t> key_seed(std::uint32_t key_id) const;

    const std::map<std::uint64_t, SessionRecord>& sessions() const { return sessions_; }
    const SessionRecord* find_session(std::uint32_t cell_id, Rnti rnti) const;
    const Subscriber* subscriber(const Imsi& imsi) const;
    const Subscriber* subscriber_by_msisdn(const Msisdn& msisdn) const;
    std::uint64_t unroutable_uplinks() const { return unroutable_; }

    /// Per-cell RNTI uniqueness among live sessions, and agreement with the
    /// allocators. Throws CoreInvariantViolation.
    void check_invariants() const;

private:
    struct Cell
    {
        CellConfig cfg;
        RntiAllocator rntis;
    };

    SessionRecord* lookup(std::uint32_t cell_id, Rnti rnti);
    Subscriber* by_tmsi(Tmsi tmsi);
    Subscriber* by_imsi(const Imsi& imsi);
    Subscriber* by_key(std::uint32_t key_id);

    void emit(const SessionRecord& s, Message m, bool protect, std::vector<OutFrame>& out) const;
    void release(std::uint64_t session_id);
    void reject(SessionRecord& s, EmmCause cause, std::vector<OutFrame>& out);
    void start_authentication(SessionRecord& s, Subscriber& sub, std::vector<OutFrame>& out);
    void rekey(SessionRecord& s, Rnti new_rnti, bool protect, std::vector<OutFrame>& out);
    void bind_session(SessionRecord& s, Subscriber& sub, std::uint64_t reply_at);
    void resume(SessionRecord& s, Subscriber& sub, std::uint64_t reply_at, std::vector<OutFrame>& out);
    void complete_handover(SessionRecord& s, Subscriber& sub, std::uint64_t reply_at, std::vector<OutFrame>& out);
    void on_measurement_report(SessionRecord& s, const msg::MeasurementReport& r, std::uint64_t now,
                               std::vector<OutFrame>& out);

    std::map<std::uint32_t, Cell> cells_;
    std::map<std::string, Subscriber> subscribers_; // by IMSI digits
    std::map<std::uint64_t, SessionRecord> sessions_;
    KeyTable keys_;
    TmsiAllocator tmsis_;
    Rng rng_;
    CoreTimers timers_;
    std::uint64_t next_session_ = 1;
    std::uint64_t unroutable_ = 0;
};

} // namespace ltesim
