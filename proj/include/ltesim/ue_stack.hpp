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
#include <span>
#include <stdexcept>
#include <string_view>
#include <variant>
#include <vector>

namespace ltesim {

enum class UePhase : std::uint8_t
{
    PoweredOff,
    Searching,
    CampedIdle,
    RachInProgress,
    Connecting,
    Authenticating,
    Secured,
    Registered,
    Blocked,
    GsmOnly,
};

std::string_view ue_phase_name(UePhase p);

enum class RatAllowed : std::uint8_t
{
    LteAndGsm,
    GsmOnly,
};

/// Why the UE is running a random access procedure.
enum class ConnectionPurpose : std::uint8_t
{
    Attach,
    Resume,
    TrackingAreaUpdate,
    Handover,
};

/// How the current RNTI was obtained.
enum class RntiSource : std::uint8_t
{
    MacRar,
    Reconfiguration,
};

class IllegalTransition : public std::logic_error
{
public:
    using std::logic_error::logic_error;
};

struct UeTimers
{
    std::uint64_t measurement_period_ms = 200;
    std::uint64_t attach_retry_backoff_ms = 1000;
    std::uint64_t inactivity_ms = 5000;
    std::uint64_t t3245_min_ms = 86'400'000;
    std::uint64_t t3245_max_ms = 172'800'000;
    std::uint64_t cell_barring_ms = 300'000;
    std::uint64_t rach_timeout_ms = 50;
    std::uint64_t procedure_timeout_ms = 2000;
    std::uint64_t cell_search_ms = 200;
    std::uint64_t reselection_period_ms = 200;
    double gsm_min_rx_dbm = -110.0;
};

struct UeConfig
{
    Imsi imsi;
    SubscriberKey key{};
    Msisdn msisdn;
    Imei imei;
    /// Hardened UE: honor Attach/TAU rejects only when integrity protected.
    bool reject_requires_integrity = false;
    UeTimers timers;
};

struct ForbiddenPlmn
{
    Plmn plmn;
    std::uint64_t t3245_deadline_ms = 0;
    bool operator==(const ForbiddenPlmn&) const = default;
};

struct BarredCell
{
    std::uint32_t cell_id = 0;
    std::uint64_t until_ms = 0;
    bool operator==(const BarredCell&) const = default;
};

/// Stored NAS security context; survives RRC idle.
struct NasContext
{
    std::uint32_t key_id = 0;
    std::uint64_t keystream_seed = 0;
    bool operator==(const NasContext&) const = default;
};

/// One physical-layer measurement handed to the UE on each tick.
struct CellMeasurement
{
    RadioCell cell;
    double rx_dbm = 0.0;
};

struct UeState
{
    explicit UeState(UeConfig cfg, std::uint64_t seed) : config(std::move(cfg)), rng(seed) {}

    UeConfig config;
    Rng rng;

    UePhase phase = UePhase::PoweredOff;
    std::optional<std::uint32_t> serving_cell;
    std::optional<Rnti> rnti;
    RntiSource rnti_source = RntiSource::MacRar;
    std::optional<Tmsi> tmsi;
    std::optional<std::uint32_t> security; // active key_id
    std::optional<NasContext> nas;
    std::optional<std::uint16_t> registered_tac;
    std::vector<ForbiddenPlmn> forbidden_plmns;
    std::vector<BarredCell> barred_cells;
    RatAllowed rat_allowed = RatAllowed::LteAndGsm;
    Position position;

    std::map<std::uint32_t, msg::Sib1> sib1s;
    std::vector<CellMeasurement> measurements;

    ConnectionPurpose purpose = ConnectionPurpose::Attach;
    std::optional<MobilityControlInfo> pending_handover;
    Challenge last_rand{};
    std::deque<std::uint16_t> pending_uplink;

    std::uint64_t last_event_ms = 0;
    std::uint64_t last_activity_ms = 0;
    std::uint64_t last_measurement_report_ms = 0;
    std::uint64_t last_reselection_ms = 0;
    std::uint64_t procedure_started_ms = 0;
    std::optional<std::uint64_t> search_started_ms;
    std::optional<std::uint64_t> retry_at_ms;

    std::optional<std::uint32_t> gsm_cell;
    bool gsm_attached = false;

    /// Keys for decoding protected downlink frames addressed to this UE.
    KeyTable key_table() const;
};

namespace ue_event {

struct PowerOn
{
    std::uint64_t now_ms = 0;
};

struct AirplaneToggle
{
    std::uint64_t now_ms = 0;
};

/// Scenario directive modelling a lost TMSI.
struct EraseTmsi
{
    std::uint64_t now_ms = 0;
};

struct Tick
{
    std::uint64_t now_ms = 0;
    std::vector<CellMeasurement> visible; // strongest first
};

struct Rx
{
    std::uint64_t now_ms = 0;
    FrameHeader header;
    Message message;
    double rx_dbm = 0.0;
};

struct AppTraffic
{
    std::uint64_t now_ms = 0;
    std::uint16_t byte_count = 0;
};

} // namespace ue_event

using UeEvent = std::variant<ue_event::PowerOn, ue_event::AirplaneToggle, ue_event::EraseTmsi, ue_event::Tick,
                             ue_event::Rx, ue_event::AppTraffic>;

std::uint64_t event_time(const UeEvent& ev);

/// An uplink frame the UE wants transmitted.
struct UeEmission
{
    std::uint32_t cell_id = 0;
    Rnti rnti;
    Protection protection = Cleartext{};
    Message message;
};

/// Cell selection: eligible cells pass the SIB1 minimum level, are not on a
/// live forbidden PLMN, are not barred and match the allowed RAT. Among them the
/// highest earfcn priority wins (taken from any listed SIB1 priority list,
/// unlisted = 0), then rx power, then the lower cell_id.
std::optional<std::uint32_t> select_cell(std::span<const CellMeasurement> visible,
                                         const std::map<std::uint32_t, msg::Sib1>& sib1s, const UeState& state,
                                         std::uint64_t now_ms);

/// Advance the state machine by one event, appending uplink emissions.
/// Throws IllegalTransition for events that cannot occur in the current phase.
void step(UeState& state, const UeEvent& event, std::vector<UeEmission>& out);

struct UeStepResult
{
    UeState state;
    std::vector<UeEmission> emissions;
};

UeStepResult step(UeState state, const UeEvent& event);

} // namespace ltesim
