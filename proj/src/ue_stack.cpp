#include "ltesim/ue_stack.hpp"

#include <algorithm>
#include <cmath>

// Transition summary (Rx events are ignored unless they come from the cell the
// UE is currently talking to):
//
//   PoweredOff     PowerOn                      -> Searching
//   Searching      Tick, cell selected          -> RachInProgress (Attach) | CampedIdle (registered, same TA)
//   Searching      Tick, every visible PLMN forbidden -> Blocked
//   Searching      Tick, GsmOnly + GSM cell      -> GsmOnly (gsm_attached)
//   CampedIdle     AppTraffic / Paging           -> RachInProgress (Resume, or Attach without context)
//   CampedIdle     reselection into a new TA     -> RachInProgress (TrackingAreaUpdate)
//   RachInProgress MacRar                        -> Connecting, RrcConnectionRequest
//                                                   (Handover: -> Registered, ReconfigurationComplete)
//   Connecting     RrcConnectionSetup            -> AttachRequest | TauRequest | Registered (Resume)
//   Connecting     IdentityRequest (no security) -> IdentityResponse
//   Connecting     AuthenticationRequest, autn ok -> Authenticating, AuthenticationResponse
//   Authenticating SecurityModeCommand           -> Secured, SecurityModeComplete
//   Secured        AttachAccept (protected)      -> Registered
//   any pre-Registered AttachReject/TauReject:
//       PlmnNotAllowed        -> Blocked, PLMN forbidden until T3245
//       EpsServicesNotAllowed -> Searching with rat_allowed = GsmOnly
//       CongestionBenign      -> Searching, cell barred, retry after backoff
//   Registered     Reconfiguration{target != serving} -> RachInProgress (Handover)
//   Registered     Reconfiguration{target == serving} -> adopt new RNTI
//   Registered     inactivity                    -> CampedIdle
//   Registered     serving cell lost             -> Searching
//   any powered    AirplaneToggle                -> Searching, forbidden list cleared

namespace ltesim {

namespace {

template <class... Ts>
struct overloaded : Ts...
{
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool plmn_forbidden(const UeState& s, const Plmn& plmn, std::uint64_t now)
{
    return std::any_of(s.forbidden_plmns.begin(), s.forbidden_plmns.end(), [&](const ForbiddenPlmn& f) {
        return f.plmn == plmn && f.t3245_deadline_ms > now;
    });
}

bool cell_barred(const UeState& s, std::uint32_t cell, std::uint64_t now)
{
    return std::any_of(s.barred_cells.begin(), s.barred_cells.end(),
                       [&](const BarredCell& b) { return b.cell_id == cell && b.until_ms > now; });
}

std::int8_t clamp_rsrp(double rx)
{
    return static_cast<std::int8_t>(std::clamp(std::lround(rx), -128L, 127L));
}

const CellMeasurement* measured(const UeState& s, std::uint32_t cell)
{
    for (const auto& m : s.measurements) {
        if (m.cell.identity.cell_id == cell) {
            return &m;
        }
    }
    return nullptr;
}

std::optional<std::uint16_t> cell_tac(const UeState& s, std::uint32_t cell)
{
    auto it = s.sib1s.find(cell);
    if (it == s.sib1s.end()) {
        return std::nullopt;
    }
    return it->second.tac;
}

void emit(UeState& s, std::vector<UeEmission>& out, Message m, bool protect)
{
    UeEmission e;
    e.cell_id = *s.serving_cell;
    e.rnti = s.rnti.value_or(Rnti{});
    if (protect && s.security) {
        e.protection = Protected{*s.security};
    }
    e.message = std::move(m);
    out.push_back(std::move(e));
}

void drop_connection(UeState& s)
{
    s.rnti.reset();
    s.security.reset();
    s.pending_handover.reset();
}

void to_searching(UeState& s, std::optional<std::uint64_t> retry_at)
{
    drop_connection(s);
    s.serving_cell.reset();
    s.phase = UePhase::Searching;
    s.search_started_ms.reset();
    s.retry_at_ms = retry_at;
}

void start_rach(UeState& s, std::uint32_t cell, ConnectionPurpose purpose, std::uint64_t now,
                std::vector<UeEmission>& out)
{
    drop_connection(s);
    s.serving_cell = cell;
    s.phase = UePhase::RachInProgress;
    s.purpose = purpose;
    s.procedure_started_ms = now;
    s.retry_at_ms.reset();
    auto preamble = static_cast<std::uint8_t>(s.rng.below(64));
    emit(s, out, msg::RachPreamble{preamble}, false);
}

bool has_context(const UeState& s)
{
    return s.tmsi.has_value() && s.nas.has_value() && s.registered_tac.has_value();
}

void flush_uplink(UeState& s, std::uint64_t now, std::vector<UeEmission>& out)
{
    while (!s.pending_uplink.empty()) {
        emit(s, out, msg::UserData{s.pending_uplink.front()}, true);
        s.pending_uplink.pop_front();
        s.last_activity_ms = now;
    }
}

void enter_registered(UeState& s, std::uint64_t now, std::vector<UeEmission>& out)
{
    s.phase = UePhase::Registered;
    s.security = s.nas->key_id;
    s.last_activity_ms = now;
    s.last_measurement_report_ms = now;
    s.search_started_ms.reset();
    s.retry_at_ms.reset();
    flush_uplink(s, now, out);
}

/// Camp on `cell` and decide whether a connection is needed right away.
void camp(UeState& s, std::uint32_t cell, std::uint64_t now, std::vector<UeEmission>& out)
{
    s.search_started_ms.reset();
    if (!has_context(s)) {
        start_rach(s, cell, ConnectionPurpose::Attach, now, out);
        return;
    }
    auto tac = cell_tac(s, cell);
    if (tac && *tac != *s.registered_tac) {
        start_rach(s, cell, ConnectionPurpose::TrackingAreaUpdate, now, out);
        return;
    }
    drop_connection(s);
    s.serving_cell = cell;
    s.phase = UePhase::CampedIdle;
    s.last_reselection_ms = now;
    if (!s.pending_uplink.empty()) {
        start_rach(s, cell, ConnectionPurpose::Resume, now, out);
    }
}

void on_search_tick(UeState& s, std::uint64_t now, std::vector<UeEmission>& out)
{
    if (s.retry_at_ms && now < *s.retry_at_ms) {
        return;
    }
    s.retry_at_ms.reset();
    if (s.rat_allowed == RatAllowed::GsmOnly) {
        if (auto cell = select_cell(s.measurements, s.sib1s, s, now)) {
            s.phase = UePhase::GsmOnly;
            s.gsm_cell = cell;
            s.gsm_attached = true;
        } else {
            s.phase = UePhase::Searching;
        }
        return;
    }
    if (!s.search_started_ms) {
        s.search_started_ms = now;
    }
    bool all_known = std::all_of(s.measurements.begin(), s.measurements.end(), [&](const CellMeasurement& m) {
        return m.cell.rat != Rat::Lte || cell_barred(s, m.cell.identity.cell_id, now) ||
               s.sib1s.contains(m.cell.identity.cell_id);
    });
    if (!all_known && now - *s.search_started_ms < s.config.timers.cell_search_ms) {
        return;
    }
    if (auto cell = select_cell(s.measurements, s.sib1s, s, now)) {
        camp(s, *cell, now, out);
        return;
    }
    // Blocked iff every visible LTE cell with a known PLMN is forbidden.
    bool any_lte = false;
    bool all_forbidden = true;
    for (const auto& m : s.measurements) {
        if (m.cell.rat != Rat::Lte) {
            continue;
        }
        auto it = s.sib1s.find(m.cell.identity.cell_id);
        if (it == s.sib1s.end()) {
            continue;
        }
        any_lte = true;
        all_forbidden = all_forbidden && plmn_forbidden(s, it->second.plmn, now);
    }
    s.phase = any_lte && all_forbidden ? UePhase::Blocked : UePhase::Searching;
}

void send_measurement_report(UeState& s, std::vector<UeEmission>& out)
{
    msg::MeasurementReport report;
    if (const auto* serving = measured(s, *s.serving_cell)) {
        report.neighbors.push_back({serving->cell.identity.cell_id, clamp_rsrp(serving->rx_dbm)});
    }
    for (const auto& m : s.measurements) {
        if (m.cell.rat != Rat::Lte || m.cell.identity.cell_id == *s.serving_cell || report.neighbors.size() >= 8) {
            continue;
        }
        report.neighbors.push_back({m.cell.identity.cell_id, clamp_rsrp(m.rx_dbm)});
    }
    emit(s, out, std::move(report), true);
}

void on_tick(UeState& s, const ue_event::Tick& t, std::vector<UeEmission>& out)
{
    const auto now = t.now_ms;
    const auto& timers = s.config.timers;
    std::erase_if(s.forbidden_plmns, [&](const ForbiddenPlmn& f) { return f.t3245_deadline_ms <= now; });
    std::erase_if(s.barred_cells, [&](const BarredCell& b) { return b.until_ms <= now; });
    s.measurements = t.visible;

    switch (s.phase) {
    case UePhase::PoweredOff:
        return;
    case UePhase::Searching:
    case UePhase::Blocked:
        on_search_tick(s, now, out);
        return;
    case UePhase::GsmOnly:
        if (!s.gsm_cell || !measured(s, *s.gsm_cell)) {
            s.gsm_cell.reset();
            s.phase = UePhase::Searching;
            on_search_tick(s, now, out);
        }
        return;
    case UePhase::CampedIdle: {
        if (!measured(s, *s.serving_cell)) {
            to_searching(s, std::nullopt);
            on_search_tick(s, now, out);
            return;
        }
        if (now - s.last_reselection_ms >= timers.reselection_period_ms) {
            s.last_reselection_ms = now;
            auto best = select_cell(s.measurements, s.sib1s, s, now);
            if (best && *best != *s.serving_cell) {
                camp(s, *best, now, out);
            }
        }
        return;
    }
    case UePhase::RachInProgress:
        if (now - s.procedure_started_ms >= timers.rach_timeout_ms) {
            to_searching(s, now + timers.attach_retry_backoff_ms);
        }
        return;
    case UePhase::Connecting:
    case UePhase::Authenticating:
    case UePhase::Secured:
        if (now - s.procedure_started_ms >= timers.procedure_timeout_ms) {
            to_searching(s, now + timers.attach_retry_backoff_ms);
        }
        return;
    case UePhase::Registered:
        if (!measured(s, *s.serving_cell)) {
            to_searching(s, std::nullopt);
            on_search_tick(s, now, out);
            return;
        }
        if (now - s.last_activity_ms >= timers.inactivity_ms) {
            drop_connection(s);
            s.phase = UePhase::CampedIdle;
            s.last_reselection_ms = now;
            return;
        }
        if (now - s.last_measurement_report_ms >= timers.measurement_period_ms) {
            s.last_measurement_report_ms = now;
            send_measurement_report(s, out);
        }
        return;
    }
}

bool pre_security(const UeState& s)
{
    return s.phase == UePhase::Connecting || s.phase == UePhase::Authenticating || s.phase == UePhase::Secured;
}

void on_reject(UeState& s, EmmCause cause, bool integrity_protected, std::uint64_t now)
{
    const auto& timers = s.config.timers;
    const auto cell = *s.serving_cell;
    if (s.config.reject_requires_integrity && !integrity_protected) {
        s.barred_cells.push_back({cell, now + timers.cell_barring_ms});
        to_searching(s, now + timers.attach_retry_backoff_ms);
        return;
    }
    switch (cause) {
    case EmmCause::PlmnNotAllowed: {
        auto it = s.sib1s.find(cell);
        if (it != s.sib1s.end()) {
            const Plmn plmn = it->second.plmn;
            std::erase_if(s.forbidden_plmns, [&](const ForbiddenPlmn& f) { return f.plmn == plmn; });
            auto t3245 = s.rng.between(timers.t3245_min_ms, timers.t3245_max_ms);
            s.forbidden_plmns.push_back({plmn, now + t3245});
        }
        to_searching(s, std::nullopt);
        s.phase = UePhase::Blocked;
        return;
    }
    case EmmCause::EpsServicesNotAllowed:
        s.rat_allowed = RatAllowed::GsmOnly;
        to_searching(s, std::nullopt);
        return;
    case EmmCause::CongestionBenign:
        s.barred_cells.push_back({cell, now + timers.cell_barring_ms});
        to_searching(s, now + timers.attach_retry_backoff_ms);
        return;
    }
}

void on_rx(UeState& s, const ue_event::Rx& rx, std::vector<UeEmission>& out)
{
    const auto now = rx.now_ms;
    const auto& h = rx.header;
    if (s.phase == UePhase::PoweredOff) {
        throw IllegalTransition("frame delivered to a powered-off UE");
    }
    if (const auto* sib = std::get_if<msg::Sib1>(&rx.message)) {
        s.sib1s[h.cell_id] = *sib;
        return;
    }
    if (std::holds_alternative<msg::Mib>(rx.message)) {
        return;
    }
    if (const auto* p = std::get_if<msg::Paging>(&rx.message)) {
        if (s.phase != UePhase::CampedIdle || h.cell_id != *s.serving_cell) {
            return;
        }
        bool for_me = std::visit(overloaded{
                                     [&](const Tmsi& t) { return s.tmsi && *s.tmsi == t; },
                                     [&](const Imsi& i) { return i == s.config.imsi; },
                                 },
                                 p->identity);
        if (!for_me) {
            return;
        }
        if (std::holds_alternative<Imsi>(p->identity)) {
            s.tmsi.reset();
            s.nas.reset();
            s.registered_tac.reset();
            start_rach(s, h.cell_id, ConnectionPurpose::Attach, now, out);
        } else {
            start_rach(s, h.cell_id, ConnectionPurpose::Resume, now, out);
        }
        return;
    }

    // Dedicated frames from any cell other than the one in use are not ours.
    if (!s.serving_cell || h.cell_id != *s.serving_cell) {
        return;
    }
    const bool prot = is_protected(h.protection);
    const auto& timers = s.config.timers;

    std::visit(
        overloaded{
            [&](const msg::MacRar& rar) {
                if (s.phase != UePhase::RachInProgress) {
                    return;
                }
                s.rnti = rar.temp_rnti;
                s.rnti_source = RntiSource::MacRar;
                s.procedure_started_ms = now;
                if (s.purpose == ConnectionPurpose::Handover) {
                    // The inactivity clock carries over from the source cell.
                    s.phase = UePhase::Registered;
                    s.security = s.nas->key_id;
                    s.last_measurement_report_ms = now;
                    emit(s, out, msg::RrcConnectionReconfigurationComplete{}, true);
                    flush_uplink(s, now, out);
                    return;
                }
                s.phase = UePhase::Connecting;
                msg::RrcConnectionRequest req;
                if (s.purpose != ConnectionPurpose::Attach && s.tmsi) {
                    req.identity = *s.tmsi;
                } else {
                    req.identity = RandomIdentity{s.rng.below(1ULL << 40)};
                }
                emit(s, out, req, false);
            },
            [&](const msg::RrcConnectionSetup&) {
                if (s.phase != UePhase::Connecting) {
                    return;
                }
                switch (s.purpose) {
                case ConnectionPurpose::Attach:
                    if (s.tmsi) {
                        emit(s, out, msg::AttachRequest{*s.tmsi}, false);
                    } else {
                        emit(s, out, msg::AttachRequest{s.config.imsi}, false);
                    }
                    return;
                case ConnectionPurpose::TrackingAreaUpdate:
                    emit(s, out, msg::TauRequest{*s.tmsi, cell_tac(s, h.cell_id).value_or(0)}, false);
                    return;
                case ConnectionPurpose::Resume:
                    if (has_context(s)) {
                        enter_registered(s, now, out);
                    }
                    return;
                case ConnectionPurpose::Handover:
                    return;
                }
            },
            [&](const msg::IdentityRequest& req) {
                if (!pre_security(s) && !(s.phase == UePhase::Registered && prot)) {
                    return;
                }
                if (s.security && !prot) {
                    return;
                }
                if (req.requested == msg::IdentityType::Imsi) {
                    emit(s, out, msg::IdentityResponse{s.config.imsi}, prot);
                } else {
                    emit(s, out, msg::IdentityResponse{s.config.imei}, prot);
                }
            },
            [&](const msg::AuthenticationRequest& req) {
                if (s.phase != UePhase::Connecting && s.phase != UePhase::Authenticating) {
                    return;
                }
                if (stub_autn(s.config.key, req.rand) != req.autn) {
                    // Network failed to authenticate itself.
                    s.barred_cells.push_back({h.cell_id, now + timers.cell_barring_ms});
                    to_searching(s, now + timers.attach_retry_backoff_ms);
                    return;
                }
                s.last_rand = req.rand;
                s.phase = UePhase::Authenticating;
                emit(s, out, msg::AuthenticationResponse{stub_mac(s.config.key, req.rand)}, false);
            },
            [&](const msg::SecurityModeCommand& cmd) {
                if (s.phase != UePhase::Authenticating) {
                    return;
                }
                s.nas = NasContext{cmd.key_id, derive_session_seed(s.config.key, s.last_rand, cmd.key_id)};
                s.security = cmd.key_id;
                s.phase = UePhase::Secured;
                emit(s, out, msg::SecurityModeComplete{}, false);
            },
            [&](const msg::AttachAccept& acc) {
                if (!prot || !s.nas) {
                    return;
                }
                bool expecting = s.phase == UePhase::Secured || s.phase == UePhase::Registered ||
                                 (s.phase == UePhase::Connecting && s.purpose == ConnectionPurpose::TrackingAreaUpdate);
                if (!expecting) {
                    return;
                }
                s.tmsi = acc.tmsi;
                s.registered_tac = acc.tac;
                s.nas->key_id = std::get<Protected>(h.protection).key_id;
                if (s.phase != UePhase::Registered) {
                    enter_registered(s, now, out);
                }
            },
            [&](const msg::AttachReject& rej) {
                if (pre_security(s)) {
                    on_reject(s, rej.emm_cause, prot, now);
                }
            },
            [&](const msg::TauReject& rej) {
                if (pre_security(s)) {
                    on_reject(s, rej.emm_cause, prot, now);
                }
            },
            [&](const msg::RrcConnectionReconfiguration& rc) {
                if (s.phase != UePhase::Registered) {
                    return;
                }
                if (!rc.mobility) {
                    emit(s, out, msg::RrcConnectionReconfigurationComplete{}, true);
                    return;
                }
                if (rc.mobility->target_cell_id == *s.serving_cell) {
                    s.rnti = rc.mobility->new_rnti;
                    s.rnti_source = RntiSource::Reconfiguration;
                    s.pending_handover.reset();
                    emit(s, out, msg::RrcConnectionReconfigurationComplete{}, true);
                    auto tac = cell_tac(s, *s.serving_cell);
                    if (tac && s.registered_tac && *tac != *s.registered_tac) {
                        emit(s, out, msg::TauRequest{*s.tmsi, *tac}, true);
                    }
                    return;
                }
                auto target = rc.mobility->target_cell_id;
                auto mobility = *rc.mobility;
                start_rach(s, target, ConnectionPurpose::Handover, now, out);
                s.pending_handover = mobility;
            },
            [&](const msg::UserData&) {
                if (s.phase == UePhase::Registered) {
                    s.last_activity_ms = std::max(s.last_activity_ms, h.timestamp_ms);
                }
            },
            [](const auto&) {},
        },
        rx.message);
}

void on_app_traffic(UeState& s, const ue_event::AppTraffic& a, std::vector<UeEmission>& out)
{
    switch (s.phase) {
    case UePhase::Registered:
        emit(s, out, msg::UserData{a.byte_count}, true);
        s.last_activity_ms = a.now_ms;
        return;
    case UePhase::PoweredOff:
    case UePhase::Blocked:
    case UePhase::GsmOnly:
        return;
    case UePhase::CampedIdle:
        s.pending_uplink.push_back(a.byte_count);
        start_rach(s, *s.serving_cell, has_context(s) ? ConnectionPurpose::Resume : ConnectionPurpose::Attach,
                   a.now_ms, out);
        return;
    default:
        if (s.rat_allowed == RatAllowed::LteAndGsm) {
            s.pending_uplink.push_back(a.byte_count);
        }
        return;
    }
}

} // namespace

std::string_view ue_phase_name(UePhase p)
{
    switch (p) {
    case UePhase::PoweredOff:
        return "powered_off";
    case UePhase::Searching:
        return "searching";
    case UePhase::CampedIdle:
        return "camped_idle";
    case UePhase::RachInProgress:
        return "rach_in_progress";
    case UePhase::Connecting:
        return "connecting";
    case UePhase::Authenticating:
        return "authenticating";
    case UePhase::Secured:
        return "secured";
    case UePhase::Registered:
        return "registered";
    case UePhase::Blocked:
        return "blocked";
    case UePhase::GsmOnly:
        return "gsm_only";
    }
    return "unknown";
}

KeyTable UeState::key_table() const
{
    KeyTable keys;
    if (nas) {
        keys.emplace(nas->key_id, nas->keystream_seed);
    }
    return keys;
}

std::uint64_t event_time(const UeEvent& ev)
{
    return std::visit([](const auto& e) { return e.now_ms; }, ev);
}

std::optional<std::uint32_t> select_cell(std::span<const CellMeasurement> visible,
                                         const std::map<std::uint32_t, msg::Sib1>& sib1s, const UeState& state,
                                         std::uint64_t now_ms)
{
    struct Candidate
    {
        std::uint32_t cell_id;
        int priority;
        double rx;
    };
    std::optional<Candidate> best;
    const Rat wanted = state.rat_allowed == RatAllowed::GsmOnly ? Rat::Gsm : Rat::Lte;

    for (const auto& m : visible) {
        const auto& id = m.cell.identity;
        if (m.cell.rat != wanted || cell_barred(state, id.cell_id, now_ms)) {
            continue;
        }
        int priority = 0;
        if (wanted == Rat::Lte) {
            auto it = sib1s.find(id.cell_id);
            if (it == sib1s.end() || m.rx_dbm < it->second.min_rx_level_dbm ||
                plmn_forbidden(state, it->second.plmn, now_ms)) {
                continue;
            }
            for (const auto& [cell, sib] : sib1s) {
                for (const auto& p : sib.priority_earfcns) {
                    if (p.earfcn == id.earfcn) {
                        priority = std::max<int>(priority, p.priority);
                    }
                }
            }
        } else if (m.rx_dbm < state.config.timers.gsm_min_rx_dbm || plmn_forbidden(state, id.plmn, now_ms)) {
            continue;
        }
        Candidate c{id.cell_id, priority, m.rx_dbm};
        if (!best || c.priority > best->priority || (c.priority == best->priority && c.rx > best->rx) ||
            (c.priority == best->priority && c.rx == best->rx && c.cell_id < best->cell_id)) {
            best = c;
        }
    }
    if (!best) {
        return std::nullopt;
    }
    return best->cell_id;
}

void step(UeState& s, const UeEvent& event, std::vector<UeEmission>& out)
{
    const auto now = event_time(event);
    if (now < s.last_event_ms) {
        throw IllegalTransition("event timestamp moved backwards");
    }
    s.last_event_ms = now;

    std::visit(overloaded{
                   [&](const ue_event::PowerOn&) {
                       if (s.phase != UePhase::PoweredOff) {
                           throw IllegalTransition("power on while already powered");
                       }
                       to_searching(s, std::nullopt);
                   },
                   [&](const ue_event::AirplaneToggle&) {
                       if (s.phase == UePhase::PoweredOff) {
                           throw IllegalTransition("airplane toggle while powered off");
                       }
                       s.forbidden_plmns.clear();
                       s.barred_cells.clear();
                       s.rat_allowed = RatAllowed::LteAndGsm;
                       s.nas.reset();
                       s.registered_tac.reset();
                       s.pending_uplink.clear();
                       s.gsm_cell.reset();
                       to_searching(s, std::nullopt);
                   },
                   [&](const ue_event::EraseTmsi&) {
                       s.tmsi.reset();
                       if (s.phase != UePhase::Registered) {
                           s.nas.reset();
                           s.registered_tac.reset();
                       }
                   },
                   [&](const ue_event::Tick& t) { on_tick(s, t, out); },
                   [&](const ue_event::Rx& rx) { on_rx(s, rx, out); },
                   [&](const ue_event::AppTraffic& a) { on_app_traffic(s, a, out); },
               },
               event);
}

UeStepResult step(UeState state, const UeEvent& event)
{
    UeStepResult r{std::move(state), {}};
    step(r.state, event, r.emissions);
    return r;
}

} // namespace ltesim
