#pragma once

#include "ltesim/attacker.hpp"
#include "ltesim/codec.hpp"
#include "ltesim/network_core.hpp"
#include "ltesim/scenario.hpp"
#include "ltesim/sniffer.hpp"
#include "ltesim/ue_stack.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ltesim {

class SimulationInvariantViolation : public std::logic_error
{
public:
    using std::logic_error::logic_error;
};

// ---------------------------------------------------------------------------
// Ground truth, recorded by the loop from UE state.

/// One stretch of time a UE held a given (cell, rnti).
struct TruthEpoch
{
    std::uint32_t cell_id = 0;
    Rnti rnti;
    std::uint64_t start_ms = 0;
    std::uint64_t end_ms = 0; // exclusive; run end for epochs still open
};

/// Trajectory step. An in-cell re-key updates the current visit instead of
/// opening a new one.
struct TruthVisit
{
    std::uint32_t cell_id = 0;
    Rnti rnti;
    std::uint64_t enter_ms = 0;
    std::optional<std::uint64_t> exit_ms;
};

struct UeTruth
{
    std::string imsi;
    std::string msisdn;
    std::vector<TruthVisit> visits;
    std::vector<TruthEpoch> epochs;
    std::uint64_t ul_bytes = 0;
    std::uint64_t dl_bytes = 0;
    std::uint64_t idle_transitions = 0;
    std::string final_phase;
    bool gsm_attached = false;
    /// Camped on a GSM cell controlled by the attacker.
    bool mitm_possible = false;
    std::optional<Tmsi> tmsi;

    std::map<std::uint32_t, std::uint64_t> dwell_ms(std::uint64_t end_ms) const;
};

struct GroundTruth
{
    std::uint64_t end_ms = 0;
    std::vector<UeTruth> ues;

    nlohmann::json to_json() const;
    static GroundTruth from_json(const nlohmann::json& j);
};

// ---------------------------------------------------------------------------

enum class FrameOrigin : std::uint8_t
{
    Ue,
    Cell,
    Rogue,
};

/// Every frame put on the air, reported once, after delivery was decided.
struct FrameEvent
{
    std::uint64_t t_ms = 0;
    FrameHeader header;
    const Message* message = nullptr;
    std::size_t length = 0;
    FrameOrigin origin = FrameOrigin::Cell;
    /// Sender for uplink, addressee for unicast downlink.
    std::optional<std::size_t> ue;
    bool delivered = false;
    std::string_view drop_reason;
};

using FrameObserver = std::function<void(const FrameEvent&)>;

struct SimulatorOptions
{
    bool record_capture = true;
    SnifferConfig sniffer;
};

struct RunResult
{
    std::string capture; // JSON Lines
    std::string capture_hash;
    GroundTruth ground_truth;
    std::optional<nlohmann::json> report;
    CatcherLog catcher_log;
    std::map<std::string, std::uint64_t> drops;
};

class Simulator
{
public:
    explicit Simulator(Scenario scenario, SimulatorOptions options = {});
    ~Simulator();
    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;

    void set_observer(FrameObserver observer) { observer_ = std::move(observer); }

    /// Run one 1 ms tick at now().
    void step();
    /// Step until now() == t (exclusive of t).
    void run_until(std::uint64_t t_ms);
    /// Run to the scenario duration and collect outputs.
    RunResult finish();

    std::uint64_t now() const noexcept { return now_; }
    const Scenario& scenario() const noexcept { return scenario_; }
    const UeState& ue(std::size_t i) const { return ues_.at(i).state; }
    std::size_t ue_count() const noexcept { return ues_.size(); }
    const NetworkCore& core() const { return *core_; }
    const RogueCell* rogue() const { return rogue_.get(); }
    const Sniffer* sniffer() const { return sniffer_.get(); }
    const GroundTruth& ground_truth() const noexcept { return truth_; }
    const std::map<std::string, std::uint64_t>& drops() const noexcept { return drops_; }

private:
    struct UeSlot
    {
        explicit UeSlot(UeState s) : state(std::move(s)) {}

        UeState state;
        std::size_t next_traffic = 0;
        std::size_t next_directive = 0;
        Position position;
        std::optional<Position> cached_for;
        bool cached_rogue = false;
        std::vector<CellMeasurement> visible;
        UePhase last_phase = UePhase::PoweredOff;
        std::optional<std::pair<std::uint32_t, Rnti>> last_key;
    };

    struct QueuedDownlink
    {
        OutFrame frame;
        FrameOrigin origin = FrameOrigin::Cell;
        std::optional<std::size_t> reply_to;
    };

    struct Tap
    {
        std::vector<std::uint8_t> bytes;
        std::optional<double> rx_dbm;
    };

    const RadioCell* radio_of(std::uint32_t cell_id) const;
    bool rogue_active() const;
    double rx_at(const RadioCell& cell, const Position& p) const;
    const std::vector<CellMeasurement>& visible_for(UeSlot& ue);

    void deliver_downlink(const QueuedDownlink& q, std::vector<Tap>& taps,
                          std::vector<std::vector<UeEmission>>& emissions);
    void deliver_uplink(std::size_t ue, const UeEmission& e, std::vector<Tap>& taps);
    void drop(const char* reason);
    void notify(const FrameHeader& h, const Message& m, std::size_t length, FrameOrigin origin,
                std::optional<std::size_t> ue, bool delivered, std::string_view reason);
    void record(const Tap& tap);
    void update_truth(std::size_t i);
    void check_invariants() const;

    Scenario scenario_;
    SimulatorOptions options_;
    std::unique_ptr<NetworkCore> core_;
    std::unique_ptr<RogueCell> rogue_;
    std::unique_ptr<Sniffer> sniffer_;
    std::vector<UeSlot> ues_;
    /// Legit LTE cells, then GSM cells, then the rogue (if any) last.
    std::vector<RadioCell> air_;
    std::size_t fixed_cells_ = 0;
    std::map<std::uint32_t, std::size_t> air_index_;
    std::map<std::uint32_t, bool> gsm_rogue_;
    /// Downlink traffic items across all UEs, sorted by time.
    std::vector<std::pair<std::uint64_t, std::pair<std::size_t, std::uint16_t>>> dl_traffic_;
    std::size_t next_dl_ = 0;
    std::vector<std::pair<std::uint64_t, Msisdn>> pages_;
    std::size_t next_page_ = 0;
    std::vector<QueuedDownlink> replies_;
    GroundTruth truth_;
    std::string capture_;
    std::map<std::string, std::uint64_t> drops_;
    FrameObserver observer_;
    std::uint64_t now_ = 0;
    bool finished_ = false;
};

/// Run a scenario to completion.
RunResult run(const Scenario& scenario, SimulatorOptions options = {});

/// Feed a saved capture through a fresh sniffer and return its report.
/// Throws CodecError on malformed lines.
nlohmann::json replay(std::string_view capture_jsonl, SnifferConfig cfg = {});

/// Parse a capture log into records (probe lines are skipped).
std::vector<CaptureRecord> parse_capture(std::string_view capture_jsonl);

} // namespace ltesim
