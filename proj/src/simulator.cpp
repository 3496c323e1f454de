#include "ltesim/simulator.hpp"

#include "ltesim/capture_json.hpp"
#include "ltesim/keyed_stub.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace ltesim {

namespace {

using nlohmann::json;

bool powered(const UeState& s)
{
    return s.phase != UePhase::PoweredOff;
}

std::optional<std::pair<std::uint32_t, Rnti>> radio_key(const UeState& s)
{
    if (!s.serving_cell || !s.rnti) {
        return std::nullopt;
    }
    return std::pair{*s.serving_cell, *s.rnti};
}

} // namespace

// ---------------------------------------------------------------------------
// Ground truth

std::map<std::uint32_t, std::uint64_t> UeTruth::dwell_ms(std::uint64_t end_ms) const
{
    std::map<std::uint32_t, std::uint64_t> dwell;
    for (const auto& v : visits) {
        const auto end = v.exit_ms.value_or(end_ms);
        dwell[v.cell_id] += end > v.enter_ms ? end - v.enter_ms : 0;
    }
    return dwell;
}

json GroundTruth::to_json() const
{
    json ues_j = json::array();
    for (const auto& u : ues) {
        json visits = json::array();
        for (const auto& v : u.visits) {
            visits.push_back({{"cell", v.cell_id},
                              {"rnti", to_hex(v.rnti)},
                              {"enter_ms", v.enter_ms},
                              {"exit_ms", v.exit_ms ? json(*v.exit_ms) : json(nullptr)}});
        }
        json epochs = json::array();
        for (const auto& e : u.epochs) {
            epochs.push_back({{"cell", e.cell_id}, {"rnti", to_hex(e.rnti)}, {"start_ms", e.start_ms}, {"end_ms", e.end_ms}});
        }
        json dwell = json::array();
        for (const auto& [cell, ms] : u.dwell_ms(end_ms)) {
            dwell.push_back({{"cell", cell}, {"ms", ms}});
        }
        ues_j.push_back({
            {"imsi", u.imsi},
            {"msisdn", u.msisdn},
            {"trajectory", std::move(visits)},
            {"epochs", std::move(epochs)},
            {"dwell", std::move(dwell)},
            {"ul_bytes", u.ul_bytes},
            {"dl_bytes", u.dl_bytes},
            {"idle_transitions", u.idle_transitions},
            {"final_phase", u.final_phase},
            {"gsm_attached", u.gsm_attached},
            {"mitm_possible", u.mitm_possible},
            {"tmsi", u.tmsi ? json(to_hex(*u.tmsi)) : json(nullptr)},
        });
    }
    return {{"end_ms", end_ms}, {"ues", std::move(ues_j)}};
}

GroundTruth GroundTruth::from_json(const json& j)
{
    GroundTruth gt;
    gt.end_ms = j.at("end_ms").get<std::uint64_t>();
    for (const auto& u : j.at("ues")) {
        UeTruth t;
        t.imsi = u.at("imsi").get<std::string>();
        t.msisdn = u.at("msisdn").get<std::string>();
        for (const auto& v : u.at("trajectory")) {
            TruthVisit visit{v.at("cell").get<std::uint32_t>(), parse_rnti_hex(v.at("rnti").get<std::string>()),
                             v.at("enter_ms").get<std::uint64_t>(), std::nullopt};
            if (!v.at("exit_ms").is_null()) {
                visit.exit_ms = v.at("exit_ms").get<std::uint64_t>();
            }
            t.visits.push_back(visit);
        }
        for (const auto& e : u.at("epochs")) {
            t.epochs.push_back({e.at("cell").get<std::uint32_t>(), parse_rnti_hex(e.at("rnti").get<std::string>()),
                                e.at("start_ms").get<std::uint64_t>(), e.at("end_ms").get<std::uint64_t>()});
        }
        t.ul_bytes = u.at("ul_bytes").get<std::uint64_t>();
        t.dl_bytes = u.at("dl_bytes").get<std::uint64_t>();
        t.idle_transitions = u.at("idle_transitions").get<std::uint64_t>();
        t.final_phase = u.at("final_phase").get<std::string>();
        t.gsm_attached = u.at("gsm_attached").get<bool>();
        t.mitm_possible = u.at("mitm_possible").get<bool>();
        if (!u.at("tmsi").is_null()) {
            t.tmsi = parse_tmsi_hex(u.at("tmsi").get<std::string>());
        }
        gt.ues.push_back(std::move(t));
    }
    return gt;
}

// ---------------------------------------------------------------------------
// Simulator

Simulator::Simulator(Scenario scenario, SimulatorOptions options)
    : scenario_(std::move(scenario)), options_(options)
{
    auto& sc = scenario_;
    for (const auto& c : sc.cells) {
        air_.push_back(c.radio);
    }
    for (const auto& g : sc.gsm_cells) {
        air_.push_back(g.cell);
        gsm_rogue_[g.cell.identity.cell_id] = g.rogue;
    }
    fixed_cells_ = air_.size();
    if (sc.rogue) {
        rogue_ = std::make_unique<RogueCell>(*sc.rogue, sc.seed);
        air_.push_back(rogue_->radio());
    }
    for (std::size_t i = 0; i < air_.size(); ++i) {
        air_index_[air_[i].identity.cell_id] = i;
    }

    core_ = std::make_unique<NetworkCore>(sc.cells, sc.hss, sc.seed);
    if (sc.sniffer.enabled) {
        sniffer_ = std::make_unique<Sniffer>(options_.sniffer);
    }

    for (std::size_t i = 0; i < sc.ues.size(); ++i) {
        const auto& spec = sc.ues[i];
        UeSlot slot(UeState(spec.config, derive_seed(sc.seed, Stream::Ue, i)));
        slot.position = spec.position;
        slot.state.position = spec.position;
        if (spec.initial_tmsi) {
            slot.state.tmsi = spec.initial_tmsi;
            core_->assign_tmsi(spec.config.imsi, *spec.initial_tmsi);
        }
        ues_.push_back(std::move(slot));

        UeTruth t;
        t.imsi = spec.config.imsi.digits();
        t.msisdn = spec.config.msisdn.digits();
        truth_.ues.push_back(std::move(t));

        for (const auto& item : spec.traffic) {
            if (item.direction == Direction::Downlink) {
                dl_traffic_.push_back({item.t_ms, {i, item.byte_count}});
            }
        }
        for (const auto& d : spec.directives) {
            if (d.kind == DirectiveKind::Page) {
                pages_.push_back({d.t_ms, *d.msisdn});
            }
        }
    }
    std::stable_sort(dl_traffic_.begin(), dl_traffic_.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::stable_sort(pages_.begin(), pages_.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
}

Simulator::~Simulator() = default;

const RadioCell* Simulator::radio_of(std::uint32_t cell_id) const
{
    auto it = air_index_.find(cell_id);
    return it == air_index_.end() ? nullptr : &air_[it->second];
}

bool Simulator::rogue_active() const
{
    return rogue_ && rogue_->active(now_);
}

double Simulator::rx_at(const RadioCell& cell, const Position& p) const
{
    return rx_power(cell, p, scenario_.path_loss);
}

const std::vector<CellMeasurement>& Simulator::visible_for(UeSlot& ue)
{
    const bool with_rogue = rogue_active();
    if (ue.cached_for && *ue.cached_for == ue.position && ue.cached_rogue == with_rogue) {
        return ue.visible;
    }
    const auto n = with_rogue ? air_.size() : fixed_cells_;
    ue.visible.clear();
    for (const auto& v : visible_cells(std::span(air_.data(), n), ue.position, scenario_.floor_dbm, scenario_.path_loss)) {
        ue.visible.push_back({*v.cell, v.rx_dbm});
    }
    ue.cached_for = ue.position;
    ue.cached_rogue = with_rogue;
    return ue.visible;
}

void Simulator::drop(const char* reason)
{
    ++drops_[reason];
}

void Simulator::notify(const FrameHeader& h, const Message& m, std::size_t length, FrameOrigin origin,
                       std::optional<std::size_t> ue, bool delivered, std::string_view reason)
{
    if (observer_) {
        observer_(FrameEvent{now_, h, &m, length, origin, ue, delivered, reason});
    }
}

void Simulator::record(const Tap& tap)
{
    if (sniffer_) {
        sniffer_->observe(tap.bytes);
    }
    if (options_.record_capture) {
        capture_ += capture_to_json(capture_record(tap.bytes, tap.rx_dbm)).dump();
        capture_ += '\n';
    }
}

void Simulator::deliver_downlink(const QueuedDownlink& q, std::vector<Tap>& taps,
                                 std::vector<std::vector<UeEmission>>& emissions)
{
    const auto& f = q.frame;
    const FrameHeader h{now_, f.cell_id, f.rnti, Direction::Downlink, f.protection};
    std::uint64_t seed = 0;
    if (const auto* p = std::get_if<Protected>(&f.protection)) {
        if (q.origin == FrameOrigin::Rogue) {
            throw SimulationInvariantViolation("rogue cell sent a protected frame");
        }
        auto s = core_->key_seed(p->key_id);
        if (!s) {
            throw SimulationInvariantViolation("protected downlink under unknown key " + std::to_string(p->key_id));
        }
        seed = *s;
    }
    auto bytes = encode(h, f.message, seed);
    const RadioCell* cell = radio_of(f.cell_id);
    if (cell == nullptr) {
        drop("unknown_cell");
        notify(h, f.message, bytes.size(), q.origin, q.reply_to, false, "unknown_cell");
        return;
    }
    const auto sniffer_rx = rx_at(*cell, scenario_.sniffer.position);

    if (f.rnti.value == Rnti::kBroadcast) {
        for (std::size_t i = 0; i < ues_.size(); ++i) {
            auto& ue = ues_[i];
            if (!powered(ue.state)) {
                continue;
            }
            const auto rx = rx_at(*cell, ue.position);
            if (rx < scenario_.floor_dbm) {
                continue;
            }
            ltesim::step(ue.state, ue_event::Rx{now_, h, f.message, rx}, emissions[i]);
        }
        notify(h, f.message, bytes.size(), q.origin, std::nullopt, true, {});
        taps.push_back({std::move(bytes), sniffer_rx});
        return;
    }

    std::optional<std::size_t> target = q.reply_to;
    if (!target) {
        for (std::size_t i = 0; i < ues_.size(); ++i) {
            const auto& s = ues_[i].state;
            if (powered(s) && s.serving_cell == f.cell_id && s.rnti == f.rnti) {
                target = i;
                break;
            }
        }
    }
    const char* reason = nullptr;
    double rx = 0.0;
    if (!target) {
        reason = "no_receiver";
    } else if (!powered(ues_[*target].state)) {
        reason = "receiver_off";
    } else if ((rx = rx_at(*cell, ues_[*target].position)) < scenario_.floor_dbm) {
        reason = "out_of_range";
    }
    if (reason != nullptr) {
        drop(reason);
        notify(h, f.message, bytes.size(), q.origin, target, false, reason);
        return;
    }

    auto& ue = ues_[*target];
    truth_.ues[*target].dl_bytes += bytes.size();
    const auto decoded = decode(bytes, ue.state.key_table());
    if (const auto* d = std::get_if<DecodedFrame>(&decoded)) {
        ltesim::step(ue.state, ue_event::Rx{now_, d->header, d->message, rx}, emissions[*target]);
    }
    notify(h, f.message, bytes.size(), q.origin, target, true, {});
    taps.push_back({std::move(bytes), sniffer_rx});
}

void Simulator::deliver_uplink(std::size_t i, const UeEmission& e, std::vector<Tap>& taps)
{
    auto& ue = ues_[i];
    const FrameHeader h{now_, e.cell_id, e.rnti, Direction::Uplink, e.protection};
    std::uint64_t seed = 0;
    if (is_protected(e.protection)) {
        if (!ue.state.nas) {
            throw SimulationInvariantViolation("UE sent a protected frame without a security context");
        }
        seed = ue.state.nas->keystream_seed;
    }
    auto bytes = encode(h, e.message, seed);
    const RadioCell* cell = radio_of(e.cell_id);
    const bool to_rogue = rogue_ && e.cell_id == rogue_->radio().identity.cell_id;
    const char* reason = nullptr;
    if (cell == nullptr || (!to_rogue && !core_->owns_cell(e.cell_id))) {
        reason = "unknown_cell";
    } else if (to_rogue && !rogue_->active(now_)) {
        reason = "cell_inactive";
    } else if (rx_at(*cell, ue.position) < scenario_.floor_dbm) {
        reason = "out_of_range";
    }
    if (reason != nullptr) {
        drop(reason);
        notify(h, e.message, bytes.size(), FrameOrigin::Ue, i, false, reason);
        return;
    }
    if (e.rnti.value != Rnti::kBroadcast) {
        truth_.ues[i].ul_bytes += bytes.size();
    }
    notify(h, e.message, bytes.size(), FrameOrigin::Ue, i, true, {});

    std::vector<OutFrame> out;
    if (to_rogue) {
        rogue_->handle_uplink(decode(bytes, {}), now_, out);
    } else {
        core_->handle_uplink(decode(bytes, core_->key_table()), now_, out);
    }
    for (auto& f : out) {
        const bool reply = f.reply;
        replies_.push_back({std::move(f), to_rogue ? FrameOrigin::Rogue : FrameOrigin::Cell,
                            reply ? std::optional<std::size_t>(i) : std::nullopt});
    }
    taps.push_back({std::move(bytes), std::nullopt});
}

void Simulator::step()
{
    if (finished_) {
        throw SimulationInvariantViolation("step after finish");
    }
    const auto t = now_;

    for (std::size_t i = 0; i < ues_.size(); ++i) {
        auto& ue = ues_[i];
        ue.position = position_at(scenario_.ues[i], t);
        ue.state.position = ue.position;
        if (scenario_.ues[i].power_on_ms == t && !powered(ue.state)) {
            std::vector<UeEmission> none;
            ltesim::step(ue.state, ue_event::PowerOn{t}, none);
        }
    }

    // Network side: broadcasts, timers, mobile-terminated traffic.
    std::vector<OutFrame> cell_frames;
    std::vector<OutFrame> rogue_frames;
    core_->tick(t, cell_frames);
    if (rogue_) {
        rogue_->tick(t, rogue_frames);
    }
    for (; next_page_ < pages_.size() && pages_[next_page_].first <= t; ++next_page_) {
        const auto& msisdn = pages_[next_page_].second;
        try {
            auto pages = core_->page(msisdn);
            cell_frames.insert(cell_frames.end(), pages.begin(), pages.end());
        } catch (const UnknownSubscriber&) {
            drop("page_unknown_subscriber");
        }
        if (sniffer_) {
            sniffer_->add_probe(msisdn, t);
        }
        if (options_.record_capture) {
            capture_ += json{{"t", t}, {"type", "probe"}, {"msisdn", msisdn.digits()}}.dump();
            capture_ += '\n';
        }
    }
    for (; next_dl_ < dl_traffic_.size() && dl_traffic_[next_dl_].first <= t; ++next_dl_) {
        const auto [ue, bytes] = dl_traffic_[next_dl_].second;
        try {
            core_->deliver_downlink(scenario_.ues[ue].config.msisdn, bytes, t, cell_frames);
        } catch (const UnknownSubscriber&) {
            drop("downlink_unknown_subscriber");
        }
    }

    std::vector<QueuedDownlink> downlink = std::move(replies_);
    replies_.clear();
    for (auto& f : cell_frames) {
        downlink.push_back({std::move(f), FrameOrigin::Cell, std::nullopt});
    }
    for (auto& f : rogue_frames) {
        downlink.push_back({std::move(f), FrameOrigin::Rogue, std::nullopt});
    }

    std::vector<std::vector<UeEmission>> emissions(ues_.size());
    std::vector<Tap> dl_taps;
    for (const auto& q : downlink) {
        deliver_downlink(q, dl_taps, emissions);
    }

    for (std::size_t i = 0; i < ues_.size(); ++i) {
        auto& ue = ues_[i];
        const auto& spec = scenario_.ues[i];
        auto& out = emissions[i];
        for (; ue.next_directive < spec.directives.size() && spec.directives[ue.next_directive].t_ms <= t;
             ++ue.next_directive) {
            switch (spec.directives[ue.next_directive].kind) {
            case DirectiveKind::EraseTmsi:
                ltesim::step(ue.state, ue_event::EraseTmsi{t}, out);
                break;
            case DirectiveKind::AirplaneToggle:
                ltesim::step(ue.state, ue_event::AirplaneToggle{t}, out);
                break;
            case DirectiveKind::Page:
                break;
            }
        }
        if (powered(ue.state)) {
            ltesim::step(ue.state, ue_event::Tick{t, visible_for(ue)}, out);
        }
        for (; ue.next_traffic < spec.traffic.size() && spec.traffic[ue.next_traffic].t_ms <= t; ++ue.next_traffic) {
            const auto& item = spec.traffic[ue.next_traffic];
            if (item.direction == Direction::Uplink && powered(ue.state)) {
                ltesim::step(ue.state, ue_event::AppTraffic{t, item.byte_count}, out);
            }
        }
    }

    std::vector<Tap> ul_taps;
    for (std::size_t i = 0; i < ues_.size(); ++i) {
        for (const auto& e : emissions[i]) {
            deliver_uplink(i, e, ul_taps);
        }
    }

    for (const auto& tap : dl_taps) {
        record(tap);
    }
    for (const auto& tap : ul_taps) {
        record(tap);
    }

    for (std::size_t i = 0; i < ues_.size(); ++i) {
        update_truth(i);
    }
    check_invariants();
    ++now_;
}

void Simulator::update_truth(std::size_t i)
{
    auto& ue = ues_[i];
    auto& truth = truth_.ues[i];
    const auto& s = ue.state;
    if (ue.last_phase == UePhase::Registered && s.phase == UePhase::CampedIdle) {
        ++truth.idle_transitions;
    }
    ue.last_phase = s.phase;

    const auto key = radio_key(s);
    if (key == ue.last_key) {
        return;
    }
    if (ue.last_key && !truth.epochs.empty()) {
        truth.epochs.back().end_ms = now_;
    }
    if (key) {
        truth.epochs.push_back({key->first, key->second, now_, now_});
    }

    const bool open = !truth.visits.empty() && !truth.visits.back().exit_ms;
    if (!key) {
        if (open) {
            truth.visits.back().exit_ms = now_;
        }
    } else if (open && ue.last_key && ue.last_key->first == key->first && s.rnti_source == RntiSource::Reconfiguration) {
        truth.visits.back().rnti = key->second;
    } else {
        if (open) {
            truth.visits.back().exit_ms = now_;
        }
        truth.visits.push_back({key->first, key->second, now_, std::nullopt});
    }
    // Same (cell, rnti) as the visit before: the device never really left.
    if (key && truth.visits.size() >= 2) {
        auto& last = truth.visits[truth.visits.size() - 1];
        auto& prev = truth.visits[truth.visits.size() - 2];
        if (prev.cell_id == last.cell_id && prev.rnti == last.rnti) {
            prev.exit_ms.reset();
            truth.visits.pop_back();
        }
    }
    ue.last_key = key;
}

void Simulator::check_invariants() const
{
    try {
        core_->check_invariants();
    } catch (const CoreInvariantViolation& e) {
        throw SimulationInvariantViolation(std::string("t=") + std::to_string(now_) + ": " + e.what());
    }
    std::set<std::pair<std::uint32_t, std::uint16_t>> held;
    for (const auto& ue : ues_) {
        const auto& s = ue.state;
        if (s.phase == UePhase::CampedIdle || !powered(s)) {
            continue;
        }
        if (auto key = radio_key(s); key && !held.insert({key->first, key->second.value}).second) {
            throw SimulationInvariantViolation("t=" + std::to_string(now_) + ": two UEs hold RNTI " +
                                               to_hex(key->second) + " in cell " + std::to_string(key->first));
        }
    }
}

void Simulator::run_until(std::uint64_t t_ms)
{
    while (now_ < t_ms) {
        step();
    }
}

RunResult Simulator::finish()
{
    run_until(scenario_.duration_ms);
    finished_ = true;
    truth_.end_ms = scenario_.duration_ms;
    for (std::size_t i = 0; i < ues_.size(); ++i) {
        const auto& s = ues_[i].state;
        auto& truth = truth_.ues[i];
        if (ues_[i].last_key && !truth.epochs.empty()) {
            truth.epochs.back().end_ms = truth_.end_ms;
        }
        truth.final_phase = std::string(ue_phase_name(s.phase));
        truth.gsm_attached = s.gsm_attached;
        truth.mitm_possible = s.gsm_attached && s.gsm_cell && gsm_rogue_.contains(*s.gsm_cell) &&
                              gsm_rogue_.at(*s.gsm_cell);
        truth.tmsi = s.tmsi;
    }

    RunResult r;
    r.capture = capture_;
    r.capture_hash = sha256_hex(capture_);
    r.ground_truth = truth_;
    if (sniffer_) {
        r.report = sniffer_->finalize_report();
    }
    if (rogue_) {
        r.catcher_log = rogue_->log();
    }
    r.drops = drops_;
    return r;
}

RunResult run(const Scenario& scenario, SimulatorOptions options)
{
    Simulator sim(scenario, options);
    return sim.finish();
}

namespace {

template <class F>
void for_each_line(std::string_view text, F&& f)
{
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const auto line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
            continue;
        }
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw CodecError(CodecErrc::InvalidField, "capture line " + std::to_string(line_no) + ": " + e.what());
        }
        f(j);
    }
}

bool is_probe(const json& j)
{
    return j.contains("type") && j.at("type") == "probe";
}

} // namespace

json replay(std::string_view capture_jsonl, SnifferConfig cfg)
{
    Sniffer sniffer(cfg);
    for_each_line(capture_jsonl, [&](const json& j) {
        if (is_probe(j)) {
            sniffer.add_probe(Msisdn::parse(j.at("msisdn").get<std::string>()), j.at("t").get<std::uint64_t>());
            return;
        }
        sniffer.observe(capture_to_frame_bytes(capture_from_json(j)));
    });
    return sniffer.finalize_report();
}

std::vector<CaptureRecord> parse_capture(std::string_view capture_jsonl)
{
    std::vector<CaptureRecord> out;
    for_each_line(capture_jsonl, [&](const json& j) {
        if (!is_probe(j)) {
            out.push_back(capture_from_json(j));
        }
    });
    return out;
}

} // namespace ltesim
