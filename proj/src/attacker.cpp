#include "ltesim/attacker.hpp"

#include <algorithm>
#include <set>

namespace ltesim {

std::string_view rogue_mode_name(RogueMode m)
{
    switch (m) {
    case RogueMode::ImsiCatcher:
        return "imsi_catcher";
    case RogueMode::AttachRejectDos:
        return "attach_reject_dos";
    case RogueMode::TauRejectDos:
        return "tau_reject_dos";
    case RogueMode::Downgrade:
        return "downgrade";
    }
    return "unknown";
}

std::optional<RogueMode> rogue_mode_from_name(std::string_view name)
{
    for (auto m : {RogueMode::ImsiCatcher, RogueMode::AttachRejectDos, RogueMode::TauRejectDos,
                   RogueMode::Downgrade}) {
        if (rogue_mode_name(m) == name) {
            return m;
        }
    }
    return std::nullopt;
}

nlohmann::json rogue_config_to_json(const RogueConfig& cfg)
{
    nlohmann::json j;
    j["cell_id"] = cfg.spoofed.cell_id;
    j["tac"] = cfg.spoofed.tac;
    j["plmn"] = {{"mcc", cfg.spoofed.plmn.mcc}, {"mnc", cfg.spoofed.plmn.mnc}};
    j["earfcn"] = cfg.spoofed.earfcn;
    if (cfg.injection) {
        j["injection"] = {{"earfcn", cfg.injection->earfcn}, {"priority", cfg.injection->priority}};
    } else {
        j["injection"] = nullptr;
    }
    auto list = nlohmann::json::array();
    for (const auto& p : cfg.priority_earfcns) {
        list.push_back({{"earfcn", p.earfcn}, {"priority", p.priority}});
    }
    j["priority_earfcns"] = std::move(list);
    j["mode"] = rogue_mode_name(cfg.mode);
    j["cause"] = emm_cause_name(cfg.cause);
    j["tx_power_dbm"] = cfg.tx_power_dbm;
    j["position"] = {{"x", cfg.position.x}, {"y", cfg.position.y}};
    return j;
}

bool CatcherLog::contains(const Imsi& imsi) const
{
    return std::any_of(entries_.begin(), entries_.end(), [&](const CatcherEntry& e) { return e.imsi == imsi; });
}

std::string CatcherLog::to_jsonl() const
{
    std::string out;
    for (const auto& e : entries_) {
        nlohmann::json j{{"t", e.timestamp_ms}, {"imsi", e.imsi.digits()}, {"rnti", to_hex(e.rnti)}, {"cell", e.cell_id}};
        out += j.dump();
        out += '\n';
    }
    return out;
}

RogueConfig scan_broadcast(std::span<const CaptureRecord> captured)
{
    std::set<std::uint32_t> with_mib;
    std::set<std::uint32_t> observed;
    struct Seen
    {
        msg::Sib1 sib;
        double rx;
    };
    std::map<std::uint32_t, Seen> sibs;
    for (const auto& rec : captured) {
        observed.insert(rec.header.cell_id);
        if (!rec.message) {
            continue;
        }
        if (std::holds_alternative<msg::Mib>(*rec.message)) {
            with_mib.insert(rec.header.cell_id);
        } else if (const auto* sib = std::get_if<msg::Sib1>(&*rec.message)) {
            const double rx = rec.rx_dbm.value_or(-1e9);
            auto it = sibs.find(rec.header.cell_id);
            if (it == sibs.end() || rx > it->second.rx) {
                sibs.insert_or_assign(rec.header.cell_id, Seen{*sib, rx});
            }
        }
    }

    const Seen* best = nullptr;
    std::uint32_t best_cell = 0;
    for (const auto& [cell, seen] : sibs) {
        if (!with_mib.contains(cell)) {
            continue;
        }
        if (best == nullptr || seen.rx > best->rx) {
            best = &seen;
            best_cell = cell;
        }
    }
    if (best == nullptr) {
        throw NoBroadcastFound("capture holds no cell with both MIB and SIB1");
    }

    RogueConfig cfg;
    cfg.spoofed.plmn = best->sib.plmn;
    cfg.spoofed.tac = static_cast<std::uint16_t>(best->sib.tac + 1);
    std::uint32_t id = best_cell;
    do {
        id = id == CellIdentity::kMaxCellId ? 1 : id + 1;
    } while (observed.contains(id));
    cfg.spoofed.cell_id = id;
    cfg.priority_earfcns = best->sib.priority_earfcns;
    const EarfcnPriority* top = nullptr;
    for (const auto& p : best->sib.priority_earfcns) {
        if (top == nullptr || p.priority > top->priority) {
            top = &p;
        }
    }
    if (top != nullptr) {
        cfg.injection = EarfcnPriority{top->earfcn, 7};
        cfg.spoofed.earfcn = top->earfcn;
    }
    cfg.min_rx_level_dbm = best->sib.min_rx_level_dbm;
    return cfg;
}

RogueCell::RogueCell(RogueConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)), rntis_(derive_seed(seed, Stream::Rogue, 1)), rng_(derive_seed(seed, Stream::Rogue, 0))
{
    radio_.identity = cfg_.spoofed;
    radio_.position = cfg_.position;
    radio_.tx_power_dbm = cfg_.tx_power_dbm;
    radio_.rat = Rat::Lte;
}

bool RogueCell::active(std::uint64_t now_ms) const
{
    return now_ms >= cfg_.active_from_ms && (!cfg_.active_until_ms || now_ms < *cfg_.active_until_ms);
}

msg::Sib1 RogueCell::sib1() const
{
    msg::Sib1 sib{cfg_.spoofed.plmn, cfg_.spoofed.tac, cfg_.spoofed.cell_id, cfg_.min_rx_level_dbm,
                  cfg_.priority_earfcns};
    if (cfg_.injection) {
        auto it = std::find_if(sib.priority_earfcns.begin(), sib.priority_earfcns.end(),
                               [&](const EarfcnPriority& p) { return p.earfcn == cfg_.injection->earfcn; });
        if (it != sib.priority_earfcns.end()) {
            it->priority = cfg_.injection->priority;
        } else {
            sib.priority_earfcns.push_back(*cfg_.injection);
        }
    }
    return sib;
}

void RogueCell::tick(std::uint64_t now_ms, std::vector<OutFrame>& out)
{
    if (!active(now_ms)) {
        return;
    }
    std::erase_if(sessions_, [&](const auto& kv) {
        if (now_ms - kv.second.since_ms >= 2000) {
            rntis_.release(kv.second.rnti);
            return true;
        }
        return false;
    });
    if (cfg_.broadcast_period_ms == 0 || now_ms % cfg_.broadcast_period_ms != 0) {
        return;
    }
    const auto cell = cfg_.spoofed.cell_id;
    out.push_back({cell, Rnti{}, Cleartext{}, msg::Mib{50, static_cast<std::uint16_t>((now_ms / 10) % 1024)}, false});
    out.push_back({cell, Rnti{}, Cleartext{}, sib1(), false});
}

void RogueCell::release(std::uint16_t rnti)
{
    rntis_.release(Rnti{rnti});
    sessions_.erase(rnti);
}

void RogueCell::release_with(Session& s, EmmCause cause, std::vector<OutFrame>& out)
{
    Message m = s.tau ? Message{msg::TauReject{cause}} : Message{msg::AttachReject{cause}};
    out.push_back({cfg_.spoofed.cell_id, s.rnti, Cleartext{}, std::move(m), true});
    release(s.rnti.value);
}

void RogueCell::record(Session& s, const Imsi& imsi, std::uint64_t now_ms)
{
    if (s.logged) {
        return;
    }
    s.logged = true;
    log_.append({now_ms, imsi, s.rnti, cfg_.spoofed.cell_id});
}

void RogueCell::handle_uplink(const DecodeResult& frame, std::uint64_t now_ms, std::vector<OutFrame>& out)
{
    const auto* decoded = std::get_if<DecodedFrame>(&frame);
    if (decoded == nullptr || !active(now_ms)) {
        return;
    }
    const auto& h = decoded->header;
    const auto cell = cfg_.spoofed.cell_id;

    if (std::holds_alternative<msg::RachPreamble>(decoded->message)) {
        if (rntis_.active() >= Rnti::kDeviceRangeSize) {
            return;
        }
        Session s{rntis_.allocate(), now_ms};
        sessions_.emplace(s.rnti.value, s);
        out.push_back({cell, s.rnti,
                       Cleartext{},
                       msg::MacRar{s.rnti, static_cast<std::uint16_t>(rng_.below(2048)),
                                   static_cast<std::uint32_t>(rng_.below(1u << 20))},
                       true});
        return;
    }
    auto it = sessions_.find(h.rnti.value);
    if (it == sessions_.end()) {
        return;
    }
    Session& s = it->second;
    auto reply = [&](Message m) { out.push_back({cell, s.rnti, Cleartext{}, std::move(m), true}); };

    // The rejection each mode answers with once it has what it wants.
    const EmmCause verdict = [&] {
        switch (cfg_.mode) {
        case RogueMode::ImsiCatcher:
            return EmmCause::CongestionBenign;
        case RogueMode::Downgrade:
            return EmmCause::EpsServicesNotAllowed;
        case RogueMode::AttachRejectDos:
        case RogueMode::TauRejectDos:
            return cfg_.cause;
        }
        return EmmCause::CongestionBenign;
    }();

    if (std::holds_alternative<msg::RrcConnectionRequest>(decoded->message)) {
        reply(msg::RrcConnectionSetup{});
    } else if (const auto* req = std::get_if<msg::AttachRequest>(&decoded->message)) {
        s.tau = false;
        if (const auto* imsi = std::get_if<Imsi>(&req->identity)) {
            record(s, *imsi, now_ms);
        } else if (cfg_.mode == RogueMode::ImsiCatcher) {
            reply(msg::IdentityRequest{msg::IdentityType::Imsi});
            return;
        }
        release_with(s, cfg_.mode == RogueMode::TauRejectDos ? EmmCause::CongestionBenign : verdict, out);
    } else if (std::holds_alternative<msg::TauRequest>(decoded->message)) {
        s.tau = true;
        if (cfg_.mode == RogueMode::ImsiCatcher) {
            reply(msg::IdentityRequest{msg::IdentityType::Imsi});
            return;
        }
        release_with(s, verdict, out);
    } else if (const auto* resp = std::get_if<msg::IdentityResponse>(&decoded->message)) {
        if (const auto* imsi = std::get_if<Imsi>(&resp->identity)) {
            record(s, *imsi, now_ms);
        }
        release_with(s, verdict, out);
    }
}

} // namespace ltesim
