#include "ltesim/network_core.hpp"

#include <algorithm>
#include <set>

// Uplink handling per session state (anything not listed is ignored):
//
//   (none)         RachPreamble                      -> new session, MacRar{temp}
//   RachDone       RrcConnectionRequest{tmsi}, known context, same TA
//                                                    -> RrcConnectionSetup, resumed (Registered)
//   RachDone       RrcConnectionRequest otherwise    -> RrcConnectionSetup, Attaching
//   RachDone       first protected frame             -> handover completion at the target
//   Attaching      AttachRequest{imsi} in HSS        -> AuthenticationRequest
//   Attaching      AttachRequest{tmsi} known         -> AuthenticationRequest
//   Attaching      AttachRequest{tmsi} unknown       -> IdentityRequest{imsi}
//   Attaching      TauRequest{tmsi} with context     -> AttachAccept (protected), Registered
//   Attaching      IdentityResponse{imsi} in HSS     -> AuthenticationRequest
//   Attaching      unknown IMSI                      -> AttachReject/TauReject{PlmnNotAllowed}
//   Attaching      AuthenticationResponse, res ok    -> SecurityModeCommand, Authenticated
//   Attaching      AuthenticationResponse, res wrong -> AttachReject{PlmnNotAllowed}, dropped
//   Authenticated  SecurityModeComplete              -> AttachAccept{fresh tmsi} (protected), Registered
//   Registered     MeasurementReport                 -> maybe handover trigger
//   Registered     TauRequest                        -> AttachAccept (protected)
//   Registered     UserData                          -> inactivity clock reset

namespace ltesim {

namespace {

template <class... Ts>
struct overloaded : Ts...
{
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const FrameHeader& header_of(const DecodeResult& r)
{
    return std::visit([](const auto& f) -> const FrameHeader& { return f.header; }, r);
}

} // namespace

std::string_view session_state_name(SessionState s)
{
    switch (s) {
    case SessionState::RachDone:
        return "rach_done";
    case SessionState::Attaching:
        return "attaching";
    case SessionState::Authenticated:
        return "authenticated";
    case SessionState::Secured:
        return "secured";
    case SessionState::Registered:
        return "registered";
    case SessionState::Idle:
        return "idle";
    }
    return "unknown";
}

std::vector<OutFrame> broadcast_tick(const CellConfig& cfg, std::uint64_t now_ms)
{
    std::vector<OutFrame> out;
    if (cfg.broadcast_period_ms == 0 || now_ms % cfg.broadcast_period_ms != 0) {
        return out;
    }
    const auto& id = cfg.identity();
    msg::Mib mib{cfg.bandwidth_rb, static_cast<std::uint16_t>((now_ms / 10) % 1024)};
    msg::Sib1 sib{id.plmn, id.tac, id.cell_id, cfg.min_rx_level_dbm, cfg.priority_earfcns};
    out.push_back({id.cell_id, Rnti{}, Cleartext{}, mib, false});
    out.push_back({id.cell_id, Rnti{}, Cleartext{}, std::move(sib), false});
    return out;
}

std::optional<NeighborMeasurement> handover_candidate(std::uint32_t serving_cell, const msg::MeasurementReport& report,
                                                      double hysteresis_db,
                                                      const std::vector<std::uint32_t>& candidates)
{
    std::optional<NeighborMeasurement> serving;
    std::optional<NeighborMeasurement> best;
    for (const auto& n : report.neighbors) {
        if (n.cell_id == serving_cell) {
            serving = n;
            continue;
        }
        if (std::find(candidates.begin(), candidates.end(), n.cell_id) == candidates.end()) {
            continue;
        }
        if (!best || n.rsrp_dbm > best->rsrp_dbm || (n.rsrp_dbm == best->rsrp_dbm && n.cell_id < best->cell_id)) {
            best = n;
        }
    }
    if (!serving || !best) {
        return std::nullopt;
    }
    if (static_cast<double>(best->rsrp_dbm) >= static_cast<double>(serving->rsrp_dbm) + hysteresis_db) {
        return best;
    }
    return std::nullopt;
}

NetworkCore::NetworkCore(std::vector<CellConfig> cells, std::vector<HssRecord> hss, std::uint64_t seed,
                         CoreTimers timers)
    : tmsis_(derive_seed(seed, Stream::Core, 1)), rng_(derive_seed(seed, Stream::Core, 0)), timers_(timers)
{
    for (auto& c : cells) {
        const auto id = c.identity().cell_id;
        RntiAllocator alloc(derive_seed(seed, Stream::CellAllocator, id));
        alloc.preset(c.forced_rntis);
        cells_.emplace(id, Cell{std::move(c), std::move(alloc)});
    }
    for (auto& h : hss) {
        auto digits = h.imsi.digits();
        subscribers_.emplace(std::move(digits), Subscriber{std::move(h)});
    }
}

void NetworkCore::assign_tmsi(const Imsi& imsi, Tmsi tmsi)
{
    auto* sub = by_imsi(imsi);
    if (sub == nullptr) {
        throw UnknownSubscriber("no HSS record for " + imsi.digits());
    }
    if (!tmsis_.claim(tmsi)) {
        throw CoreInvariantViolation("TMSI " + to_hex(tmsi) + " already assigned");
    }
    sub->tmsi = tmsi;
}

std::vector<std::uint32_t> NetworkCore::cell_ids() const
{
    std::vector<std::uint32_t> ids;
    for (const auto& [id, c] : cells_) {
        ids.push_back(id);
    }
    return ids;
}

std::optional<std::uint64_t> NetworkCore::key_seed(std::uint32_t key_id) const
{
    auto it = keys_.find(key_id);
    if (it == keys_.end()) {
        return std::nullopt;
    }
    return it->second;
}

SessionRecord* NetworkCore::lookup(std::uint32_t cell_id, Rnti rnti)
{
    for (auto& [id, s] : sessions_) {
        if (s.cell_id == cell_id && (s.rnti == rnti || s.alias == rnti)) {
            return &s;
        }
    }
    return nullptr;
}

const SessionRecord* NetworkCore::find_session(std::uint32_t cell_id, Rnti rnti) const
{
    return const_cast<NetworkCore*>(this)->lookup(cell_id, rnti);
}

NetworkCore::Subscriber* NetworkCore::by_tmsi(Tmsi tmsi)
{
    for (auto& [imsi, sub] : subscribers_) {
        if (sub.tmsi == tmsi) {
            return &sub;
        }
    }
    return nullptr;
}

NetworkCore::Subscriber* NetworkCore::by_imsi(const Imsi& imsi)
{
    auto it = subscribers_.find(imsi.digits());
    return it == subscribers_.end() ? nullptr : &it->second;
}

NetworkCore::Subscriber* NetworkCore::by_key(std::uint32_t key_id)
{
    for (auto& [imsi, sub] : subscribers_) {
        if (sub.key_id == key_id) {
            return &sub;
        }
    }
    return nullptr;
}

const NetworkCore::Subscriber* NetworkCore::subscriber(const Imsi& imsi) const
{
    return const_cast<NetworkCore*>(this)->by_imsi(imsi);
}

const NetworkCore::Subscriber* NetworkCore::subscriber_by_msisdn(const Msisdn& msisdn) const
{
    for (const auto& [imsi, sub] : subscribers_) {
        if (sub.hss.msisdn == msisdn) {
            return &sub;
        }
    }
    return nullptr;
}

void NetworkCore::emit(const SessionRecord& s, Message m, bool protect, std::vector<OutFrame>& out) const
{
    OutFrame f{s.cell_id, s.rnti, Cleartext{}, std::move(m), true};
    if (protect) {
        if (!s.key_id) {
            throw CoreInvariantViolation("protected frame for a session without a key");
        }
        f.protection = Protected{*s.key_id};
    } else if (s.secured) {
        // Cleartext mobility control info is the one modelled leak.
        const auto* rc = std::get_if<msg::RrcConnectionReconfiguration>(&f.message);
        bool leak = rc != nullptr && rc->mobility && !cells_.at(s.cell_id).cfg.encrypt_handover_trigger;
        if (!leak) {
            throw CoreInvariantViolation(std::string("cleartext ") + std::string(message_name(f.message)) +
                                         " after security activation");
        }
    }
    out.push_back(std::move(f));
}

void NetworkCore::release(std::uint64_t session_id)
{
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) {
        return;
    }
    auto& s = it->second;
    auto& cell = cells_.at(s.cell_id);
    cell.rntis.release(s.rnti);
    if (s.alias) {
        cell.rntis.release(*s.alias);
    }
    if (s.pending_handover) {
        cells_.at(s.pending_handover->target_cell_id).rntis.release(s.pending_handover->new_rnti);
    }
    if (s.imsi) {
        if (auto* sub = by_imsi(*s.imsi); sub != nullptr && sub->session == session_id) {
            sub->session.reset();
        }
    }
    sessions_.erase(it);
}

void NetworkCore::reject(SessionRecord& s, EmmCause cause, std::vector<OutFrame>& out)
{
    if (s.tau_pending) {
        emit(s, msg::TauReject{cause}, false, out);
    } else {
        emit(s, msg::AttachReject{cause}, false, out);
    }
    release(s.id);
}

void NetworkCore::start_authentication(SessionRecord& s, Subscriber& sub, std::vector<OutFrame>& out)
{
    s.imsi = sub.hss.imsi;
    for (auto& b : s.rand) {
        b = static_cast<std::uint8_t>(rng_.below(256));
    }
    emit(s, msg::AuthenticationRequest{s.rand, stub_autn(sub.hss.key, s.rand)}, false, out);
}

void NetworkCore::rekey(SessionRecord& s, Rnti new_rnti, bool protect, std::vector<OutFrame>& out)
{
    emit(s, msg::RrcConnectionReconfiguration{MobilityControlInfo{s.cell_id, new_rnti}}, protect, out);
    if (s.alias) {
        cells_.at(s.cell_id).rntis.release(*s.alias);
    }
    s.alias = s.rnti;
    s.rnti = new_rnti;
}

void NetworkCore::bind_session(SessionRecord& s, Subscriber& sub, std::uint64_t reply_at)
{
    if (sub.session && *sub.session != s.id) {
        auto old = sessions_.find(*sub.session);
        if (old != sessions_.end() && !sub.prior) {
            sub.prior = std::make_pair(old->second.cell_id, old->second.rnti);
        }
        release(*sub.session);
    }
    s.imsi = sub.hss.imsi;
    s.tmsi = sub.tmsi;
    s.key_id = sub.key_id;
    s.state = SessionState::Registered;
    s.state_since_ms = reply_at;
    sub.session = s.id;
}

void NetworkCore::resume(SessionRecord& s, Subscriber& sub, std::uint64_t reply_at, std::vector<OutFrame>& out)
{
    bind_session(s, sub, reply_at);
    emit(s, msg::RrcConnectionSetup{}, false, out);
    s.secured = true;
    sub.last_activity_ms = reply_at;

    auto& cell = cells_.at(s.cell_id);
    if (sub.prior && sub.prior->first == s.cell_id) {
        const Rnti prior = sub.prior->second;
        if (cell.cfg.rnti_refresh_on_idle) {
            if (s.rnti == prior) {
                rekey(s, cell.rntis.allocate_excluding(prior), true, out);
            }
        } else if (s.rnti != prior && cell.rntis.claim(prior)) {
            rekey(s, prior, true, out);
        }
    }
    sub.prior.reset();
    while (!sub.dl_buffer.empty()) {
        emit(s, msg::UserData{sub.dl_buffer.front()}, true, out);
        sub.dl_buffer.pop_front();
    }
}

void NetworkCore::complete_handover(SessionRecord& s, Subscriber& sub, std::uint64_t reply_at,
                                    std::vector<OutFrame>& out)
{
    std::optional<Rnti> target_rnti;
    if (sub.session) {
        auto src = sessions_.find(*sub.session);
        if (src != sessions_.end() && src->second.pending_handover &&
            src->second.pending_handover->target_cell_id == s.cell_id) {
            target_rnti = src->second.pending_handover->new_rnti;
            src->second.pending_handover.reset(); // ownership moves to s
            release(src->first);
        }
    }
    const auto activity = sub.last_activity_ms;
    bind_session(s, sub, reply_at);
    s.secured = true;
    sub.last_activity_ms = activity;
    sub.tac = sub.tac.value_or(cells_.at(s.cell_id).cfg.identity().tac);
    if (target_rnti) {
        rekey(s, *target_rnti, cells_.at(s.cell_id).cfg.encrypt_handover_trigger, out);
    }
}

void NetworkCore::on_measurement_report(SessionRecord& s, const msg::MeasurementReport& r, std::uint64_t now,
                                        std::vector<OutFrame>& out)
{
    if (s.state != SessionState::Registered || s.pending_handover) {
        return;
    }
    const auto& cfg = cells_.at(s.cell_id).cfg;
    std::vector<std::uint32_t> candidates;
    for (const auto& [id, c] : cells_) {
        if (id != s.cell_id) {
            candidates.push_back(id);
        }
    }
    auto target = handover_candidate(s.cell_id, r, cfg.handover_hysteresis_db, candidates);
    if (!target) {
        return;
    }
    const Rnti new_rnti = cells_.at(target->cell_id).rntis.allocate();
    MobilityControlInfo mci{target->cell_id, new_rnti};
    s.pending_handover = mci;
    s.handover_issued_ms = now;
    emit(s, msg::RrcConnectionReconfiguration{mci}, cfg.encrypt_handover_trigger, out);
}

void NetworkCore::tick(std::uint64_t now_ms, std::vector<OutFrame>& out)
{
    for (const auto& [id, c] : cells_) {
        auto frames = broadcast_tick(c.cfg, now_ms);
        out.insert(out.end(), std::make_move_iterator(frames.begin()), std::make_move_iterator(frames.end()));
    }

    std::vector<std::uint64_t> idle;
    std::vector<std::uint64_t> stale;
    for (auto& [id, s] : sessions_) {
        if (s.pending_handover && now_ms - s.handover_issued_ms >= timers_.handover_timeout_ms) {
            cells_.at(s.pending_handover->target_cell_id).rntis.release(s.pending_handover->new_rnti);
            s.pending_handover.reset();
        }
        if (s.state == SessionState::Registered) {
            const auto* sub = s.imsi ? by_imsi(*s.imsi) : nullptr;
            if (sub != nullptr && now_ms - sub->last_activity_ms >= timers_.inactivity_ms) {
                idle.push_back(id);
            }
        } else if (now_ms - s.state_since_ms >= timers_.procedure_timeout_ms) {
            stale.push_back(id);
        }
    }
    for (auto id : idle) {
        idle_transition(id);
    }
    for (auto id : stale) {
        release(id);
    }
}

void NetworkCore::idle_transition(std::uint64_t session_id)
{
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) {
        return;
    }
    auto& s = it->second;
    if (s.state != SessionState::Registered) {
        throw CoreInvariantViolation("idle transition from " + std::string(session_state_name(s.state)));
    }
    if (auto* sub = s.imsi ? by_imsi(*s.imsi) : nullptr) {
        sub->prior = std::make_pair(s.cell_id, s.rnti);
    }
    s.state = SessionState::Idle;
    release(session_id);
}

std::vector<OutFrame> NetworkCore::page(const Msisdn& msisdn) const
{
    const auto* sub = subscriber_by_msisdn(msisdn);
    if (sub == nullptr) {
        throw UnknownSubscriber("msisdn " + msisdn.digits() + " not provisioned");
    }
    if (!sub->tac) {
        throw UnknownSubscriber("msisdn " + msisdn.digits() + " never attached");
    }
    msg::Paging p;
    if (sub->tmsi) {
        p.identity = *sub->tmsi;
    } else {
        p.identity = sub->hss.imsi;
    }
    std::vector<OutFrame> out;
    for (const auto& [id, c] : cells_) {
        if (c.cfg.identity().tac == *sub->tac) {
            out.push_back({id, Rnti{}, Cleartext{}, p, false});
        }
    }
    return out;
}

void NetworkCore::deliver_downlink(const Msisdn& msisdn, std::uint16_t byte_count, std::uint64_t now_ms,
                                   std::vector<OutFrame>& out)
{
    auto* sub = const_cast<Subscriber*>(subscriber_by_msisdn(msisdn));
    if (sub == nullptr || !sub->key_id) {
        return;
    }
    if (sub->session) {
        auto& s = sessions_.at(*sub->session);
        if (s.state == SessionState::Registered) {
            emit(s, msg::UserData{byte_count}, true, out);
            out.back().reply = false;
            sub->last_activity_ms = now_ms;
            return;
        }
    }
    sub->dl_buffer.push_back(byte_count);
    if (sub->dl_buffer.size() == 1) {
        auto frames = page(msisdn);
        out.insert(out.end(), frames.begin(), frames.end());
    }
}

void NetworkCore::handle_uplink(const DecodeResult& frame, std::uint64_t now_ms, std::vector<OutFrame>& out)
{
    const auto& h = header_of(frame);
    const auto reply_at = now_ms + 1;
    if (!owns_cell(h.cell_id) || h.direction != Direction::Uplink) {
        ++unroutable_;
        return;
    }
    const auto* decoded = std::get_if<DecodedFrame>(&frame);
    if (decoded == nullptr) {
        ++unroutable_;
        return;
    }
    const Message& m = decoded->message;

    if (const auto* pre = std::get_if<msg::RachPreamble>(&m)) {
        (void)pre;
        auto& cell = cells_.at(h.cell_id);
        if (cell.rntis.active() >= Rnti::kDeviceRangeSize) {
            return;
        }
        SessionRecord s;
        s.id = next_session_++;
        s.cell_id = h.cell_id;
        s.rnti = cell.rntis.allocate();
        s.state_since_ms = now_ms;
        auto ta = static_cast<std::uint16_t>(rng_.below(2048));
        auto grant = static_cast<std::uint32_t>(rng_.below(1u << 20));
        auto& stored = sessions_.emplace(s.id, s).first->second;
        emit(stored, msg::MacRar{stored.rnti, ta, grant}, false, out);
        return;
    }

    SessionRecord* sp = lookup(h.cell_id, h.rnti);
    if (sp == nullptr) {
        ++unroutable_;
        return;
    }
    SessionRecord& s = *sp;
    if (s.alias && h.rnti == s.rnti) {
        cells_.at(s.cell_id).rntis.release(*s.alias);
        s.alias.reset();
    }
    const auto* prot = std::get_if<Protected>(&h.protection);

    if (s.state == SessionState::RachDone && prot != nullptr) {
        auto* sub = by_key(prot->key_id);
        if (sub == nullptr) {
            ++unroutable_;
            return;
        }
        complete_handover(s, *sub, reply_at, out);
        if (std::holds_alternative<msg::UserData>(m)) {
            sub->last_activity_ms = h.timestamp_ms;
        }
        return;
    }
    if (s.secured && prot != nullptr && s.key_id != prot->key_id) {
        ++unroutable_;
        return;
    }

    std::visit(
        overloaded{
            [&](const msg::RrcConnectionRequest& req) {
                if (s.state != SessionState::RachDone) {
                    return;
                }
                s.state = SessionState::Attaching;
                s.state_since_ms = now_ms;
                if (const auto* tmsi = std::get_if<Tmsi>(&req.identity)) {
                    auto* sub = by_tmsi(*tmsi);
                    if (sub != nullptr && sub->key_id && sub->tac) {
                        if (*sub->tac == cells_.at(s.cell_id).cfg.identity().tac) {
                            resume(s, *sub, reply_at, out);
                            return;
                        }
                        s.tau_pending = true;
                    }
                }
                emit(s, msg::RrcConnectionSetup{}, false, out);
            },
            [&](const msg::AttachRequest& req) {
                if (s.state != SessionState::Attaching || s.secured) {
                    return;
                }
                s.tau_pending = false;
                if (const auto* imsi = std::get_if<Imsi>(&req.identity)) {
                    if (auto* sub = by_imsi(*imsi)) {
                        start_authentication(s, *sub, out);
                    } else {
                        reject(s, EmmCause::PlmnNotAllowed, out);
                    }
                    return;
                }
                if (auto* sub = by_tmsi(std::get<Tmsi>(req.identity))) {
                    start_authentication(s, *sub, out);
                } else {
                    emit(s, msg::IdentityRequest{msg::IdentityType::Imsi}, false, out);
                }
            },
            [&](const msg::TauRequest& req) {
                const auto tac = cells_.at(s.cell_id).cfg.identity().tac;
                if (s.state == SessionState::Registered && prot != nullptr) {
                    auto* sub = by_imsi(*s.imsi);
                    sub->tac = tac;
                    emit(s, msg::AttachAccept{*sub->tmsi, tac}, true, out);
                    return;
                }
                if (s.state != SessionState::Attaching || s.secured) {
                    return;
                }
                s.tau_pending = true;
                auto* sub = by_tmsi(req.tmsi);
                if (sub == nullptr || !sub->key_id) {
                    emit(s, msg::IdentityRequest{msg::IdentityType::Imsi}, false, out);
                    return;
                }
                bind_session(s, *sub, reply_at);
                s.secured = true;
                sub->tac = tac;
                sub->prior.reset();
                sub->last_activity_ms = reply_at;
                emit(s, msg::AttachAccept{*sub->tmsi, tac}, true, out);
            },
            [&](const msg::IdentityResponse& resp) {
                if (s.state != SessionState::Attaching || s.secured) {
                    return;
                }
                const auto* imsi = std::get_if<Imsi>(&resp.identity);
                if (imsi == nullptr) {
                    return;
                }
                if (auto* sub = by_imsi(*imsi)) {
                    start_authentication(s, *sub, out);
                } else {
                    reject(s, EmmCause::PlmnNotAllowed, out);
                }
            },
            [&](const msg::AuthenticationResponse& resp) {
                if (s.state != SessionState::Attaching || !s.imsi) {
                    return;
                }
                auto* sub = by_imsi(*s.imsi);
                if (resp.res != stub_mac(sub->hss.key, s.rand)) {
                    reject(s, EmmCause::PlmnNotAllowed, out);
                    return;
                }
                std::uint32_t key_id = 0;
                do {
                    key_id = static_cast<std::uint32_t>(rng_.below(0xFFFFFFFFull)) + 1;
                } while (keys_.contains(key_id));
                keys_.emplace(key_id, derive_session_seed(sub->hss.key, s.rand, key_id));
                s.key_id = key_id;
                s.state = SessionState::Authenticated;
                s.state_since_ms = now_ms;
                emit(s, msg::SecurityModeCommand{key_id}, false, out);
            },
            [&](const msg::SecurityModeComplete&) {
                if (s.state != SessionState::Authenticated) {
                    return;
                }
                auto* sub = by_imsi(*s.imsi);
                const auto key_id = *s.key_id;
                s.state = SessionState::Secured;
                s.secured = true;
                if (sub->key_id && *sub->key_id != key_id) {
                    keys_.erase(*sub->key_id);
                }
                sub->key_id = key_id;
                sub->keystream_seed = keys_.at(key_id);
                if (sub->tmsi) {
                    tmsis_.release(*sub->tmsi);
                }
                sub->tmsi = tmsis_.allocate();
                sub->tac = cells_.at(s.cell_id).cfg.identity().tac;
                sub->prior.reset();
                bind_session(s, *sub, reply_at);
                s.secured = true;
                sub->last_activity_ms = reply_at;
                emit(s, msg::AttachAccept{*sub->tmsi, *sub->tac}, true, out);
            },
            [&](const msg::MeasurementReport& r) { on_measurement_report(s, r, now_ms, out); },
            [&](const msg::UserData&) {
                if (s.state == SessionState::Registered) {
                    by_imsi(*s.imsi)->last_activity_ms = h.timestamp_ms;
                }
            },
            [](const auto&) {},
        },
        m);
}

void NetworkCore::check_invariants() const
{
    std::map<std::uint32_t, std::multiset<std::uint16_t>> held;
    for (const auto& [id, s] : sessions_) {
        if (s.state == SessionState::Idle) {
            continue;
        }
        held[s.cell_id].insert(s.rnti.value);
        if (s.alias) {
            held[s.cell_id].insert(s.alias->value);
        }
        if (s.pending_handover) {
            held[s.pending_handover->target_cell_id].insert(s.pending_handover->new_rnti.value);
        }
    }
    for (const auto& [cell_id, c] : cells_) {
        const auto& values = held[cell_id];
        for (auto v : values) {
            if (values.count(v) > 1) {
                throw CoreInvariantViolation("cell " + std::to_string(cell_id) + " has RNTI " + to_hex(Rnti{v}) +
                                             " on two live sessions");
            }
            if (!c.rntis.in_use(Rnti{v})) {
                throw CoreInvariantViolation("cell " + std::to_string(cell_id) + " session RNTI " +
                                             to_hex(Rnti{v}) + " not held by the allocator");
            }
        }
        if (values.size() != c.rntis.active()) {
            throw CoreInvariantViolation("cell " + std::to_string(cell_id) + " allocator leaks RNTIs");
        }
    }
}

} // namespace ltesim
