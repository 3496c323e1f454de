#include "ltesim/sniffer.hpp"

#include <algorithm>
#include <set>

namespace ltesim {

namespace {

const FrameHeader& header_of(const DecodeResult& r)
{
    return std::visit([](const auto& f) -> const FrameHeader& { return f.header; }, r);
}

nlohmann::json key_json(std::uint32_t cell, Rnti rnti)
{
    return {{"cell", cell}, {"rnti", to_hex(rnti)}};
}

} // namespace

std::map<std::uint32_t, std::uint64_t> TrackedSession::dwell_ms() const
{
    std::map<std::uint32_t, std::uint64_t> dwell;
    for (std::size_t i = 0; i < trajectory.size(); ++i) {
        const auto start = trajectory[i].enter_ms;
        const auto end = i + 1 < trajectory.size() ? trajectory[i + 1].enter_ms : last_seen_ms;
        dwell[trajectory[i].cell_id] += end > start ? end - start : 0;
    }
    return dwell;
}

TrackedSession& Sniffer::create(SessionKey key, std::uint64_t t)
{
    TrackedSession s;
    s.id = next_id_++;
    s.cell_id = key.first;
    s.rnti = Rnti{key.second};
    s.first_seen_ms = t;
    s.last_seen_ms = t;
    s.trajectory.push_back({key.first, Rnti{key.second}, t});
    s.keys.push_back(key);
    index_[key] = s.id;
    return sessions_.emplace(s.id, std::move(s)).first->second;
}

void Sniffer::follow(PendingHandover p, SessionKey new_key, std::uint64_t t)
{
    auto& s = sessions_.at(p.session);
    for (const auto& k : {p.from, SessionKey{s.cell_id, s.rnti.value}}) {
        auto it = index_.find(k);
        if (it != index_.end() && it->second == s.id) {
            index_.erase(it);
        }
    }
    s.trajectory.push_back({new_key.first, Rnti{new_key.second}, t});
    s.cell_id = new_key.first;
    s.rnti = Rnti{new_key.second};
    s.keys.push_back(new_key);
    index_[new_key] = s.id;
    ++stats_.handovers_followed;
}

void Sniffer::merge_into(std::uint64_t target, std::uint64_t source)
{
    if (target == source) {
        return;
    }
    auto& t = sessions_.at(target);
    auto& s = sessions_.at(source);
    t.ul_bytes += s.ul_bytes;
    t.dl_bytes += s.dl_bytes;
    t.first_seen_ms = std::min(t.first_seen_ms, s.first_seen_ms);
    t.last_seen_ms = std::max(t.last_seen_ms, s.last_seen_ms);
    if (!t.bound_tmsi) {
        t.bound_tmsi = s.bound_tmsi;
    }
    for (const auto& k : s.keys) {
        auto it = index_.find(k);
        if (it != index_.end() && it->second == source) {
            it->second = target;
        }
        t.keys.push_back(k);
    }
    sessions_.erase(source);
}

void Sniffer::observe(std::span<const std::uint8_t> frame)
{
    DecodeResult r;
    try {
        r = decode(frame, {});
    } catch (const CodecError&) {
        ++stats_.undecodable_frames;
        return;
    }
    const auto& h = header_of(r);
    const auto t = h.timestamp_ms;
    ++stats_.frames;
    last_observed_ = std::max(last_observed_, t);
    const auto* decoded = std::get_if<DecodedFrame>(&r);
    if (decoded == nullptr) {
        ++stats_.opaque_frames;
    }
    const Message* m = decoded != nullptr ? &decoded->message : nullptr;

    std::erase_if(pending_, [&](const PendingHandover& p) {
        if (t > p.issued_ms + cfg_.handover_window_ms) {
            ++stats_.handovers_expired;
            return true;
        }
        return false;
    });

    if (h.rnti.value == Rnti::kBroadcast) {
        if (m != nullptr) {
            if (const auto* paging = std::get_if<msg::Paging>(m)) {
                if (const auto* tmsi = std::get_if<Tmsi>(&paging->identity)) {
                    pagings_.push_back({t, h.cell_id, *tmsi});
                }
            }
        }
        return;
    }

    const SessionKey key{h.cell_id, h.rnti.value};
    if (m != nullptr && std::holds_alternative<msg::MacRar>(*m)) {
        rars_.push_back({t, h.cell_id, h.rnti});
    }

    auto find_pending = [&](std::uint32_t cell, Rnti rnti) {
        return std::find_if(pending_.begin(), pending_.end(), [&](const PendingHandover& p) {
            return p.target_cell == cell && p.expected_rnti == rnti;
        });
    };

    std::uint64_t sid = 0;
    if (auto it = index_.find(key); it != index_.end()) {
        sid = it->second;
    } else if (auto p = find_pending(h.cell_id, h.rnti); p != pending_.end()) {
        auto copy = *p;
        pending_.erase(p);
        sid = copy.session;
        follow(copy, key, t);
    } else {
        sid = create(key, t).id;
    }

    {
        auto& s = sessions_.at(sid);
        (h.direction == Direction::Uplink ? s.ul_bytes : s.dl_bytes) += frame.size();
        s.last_seen_ms = std::max(s.last_seen_ms, t);
        stats_.attributed_bytes += frame.size();
    }

    const auto* rc = m != nullptr ? std::get_if<msg::RrcConnectionReconfiguration>(m) : nullptr;
    if (rc == nullptr || !rc->mobility) {
        return;
    }
    const auto& mci = *rc->mobility;
    if (mci.target_cell_id != h.cell_id) {
        std::erase_if(pending_, [&](const PendingHandover& p) { return p.session == sid; });
        pending_.push_back({sid, key, mci.target_cell_id, mci.new_rnti, t});
        return;
    }

    // In-cell RNTI update: either the last step of a followed handover or a plain re-key.
    const SessionKey new_key{h.cell_id, mci.new_rnti.value};
    if (auto p = find_pending(h.cell_id, mci.new_rnti); p != pending_.end() && p->session != sid) {
        auto copy = *p;
        pending_.erase(p);
        follow(copy, new_key, t);
        merge_into(copy.session, sid);
        return;
    }
    auto& s = sessions_.at(sid);
    if (auto it = index_.find(key); it != index_.end() && it->second == sid) {
        index_.erase(it);
    }
    s.cell_id = new_key.first;
    s.rnti = mci.new_rnti;
    s.keys.push_back(new_key);
    index_[new_key] = sid;
    if (!s.trajectory.empty() && s.trajectory.back().cell_id == h.cell_id) {
        s.trajectory.back().rnti = mci.new_rnti;
    }
}

void Sniffer::add_probe(const Msisdn& msisdn, std::uint64_t t_ms)
{
    probes_.push_back({t_ms, msisdn});
}

void Sniffer::correlate_paging(std::uint64_t window_ms)
{
    for (const auto& p : pagings_) {
        bool ambiguous = std::any_of(pagings_.begin(), pagings_.end(), [&](const PagingEvent& q) {
            const auto gap = q.t_ms > p.t_ms ? q.t_ms - p.t_ms : p.t_ms - q.t_ms;
            return q.cell_id == p.cell_id && q.tmsi != p.tmsi && gap <= window_ms;
        });
        if (ambiguous) {
            continue;
        }
        const RarEvent* rar = nullptr;
        int count = 0;
        for (const auto& r : rars_) {
            if (r.cell_id == p.cell_id && r.t_ms >= p.t_ms && r.t_ms <= p.t_ms + window_ms) {
                rar = &r;
                ++count;
            }
        }
        if (count != 1) {
            continue;
        }
        const SessionKey key{rar->cell_id, rar->rnti.value};
        TrackedSession* owner = nullptr;
        for (auto& [id, s] : sessions_) {
            if (s.first_seen_ms <= rar->t_ms && std::find(s.keys.begin(), s.keys.end(), key) != s.keys.end()) {
                owner = &s; // latest matching session wins on RNTI reuse
            }
        }
        if (owner != nullptr) {
            owner->bound_tmsi = p.tmsi;
        }
    }

    for (const auto& probe : probes_) {
        std::set<std::uint32_t> paged;
        for (const auto& p : pagings_) {
            if (p.t_ms >= probe.t_ms && p.t_ms <= probe.t_ms + window_ms) {
                paged.insert(p.tmsi.value);
            }
        }
        if (paged.size() != 1) {
            continue;
        }
        const Tmsi tmsi{*paged.begin()};
        for (auto& [id, s] : sessions_) {
            if (s.bound_tmsi == tmsi) {
                s.bound_msisdn = probe.msisdn;
            }
        }
    }
}

nlohmann::json Sniffer::report(std::uint64_t now_ms) const
{
    nlohmann::json sessions = nlohmann::json::array();
    for (const auto& [id, s] : sessions_) {
        nlohmann::json traj = nlohmann::json::array();
        for (const auto& e : s.trajectory) {
            auto j = key_json(e.cell_id, e.rnti);
            j["enter_ms"] = e.enter_ms;
            traj.push_back(std::move(j));
        }
        nlohmann::json dwell = nlohmann::json::array();
        for (const auto& [cell, ms] : s.dwell_ms()) {
            dwell.push_back({{"cell", cell}, {"ms", ms}});
        }
        nlohmann::json keys = nlohmann::json::array();
        for (const auto& [cell, rnti] : s.keys) {
            keys.push_back(key_json(cell, Rnti{rnti}));
        }
        nlohmann::json j{
            {"id", s.id},
            {"cell", s.cell_id},
            {"rnti", to_hex(s.rnti)},
            {"first_seen_ms", s.first_seen_ms},
            {"last_seen_ms", s.last_seen_ms},
            {"ul_bytes", s.ul_bytes},
            {"dl_bytes", s.dl_bytes},
            {"bound_tmsi", s.bound_tmsi ? nlohmann::json(to_hex(*s.bound_tmsi)) : nlohmann::json(nullptr)},
            {"bound_msisdn", s.bound_msisdn ? nlohmann::json(s.bound_msisdn->digits()) : nlohmann::json(nullptr)},
            {"trajectory", std::move(traj)},
            {"dwell", std::move(dwell)},
            {"keys", std::move(keys)},
        };
        sessions.push_back(std::move(j));
    }

    std::vector<const TrackedSession*> ranked;
    for (const auto& [id, s] : sessions_) {
        ranked.push_back(&s);
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const TrackedSession* a, const TrackedSession* b) {
        return a->ul_bytes + a->dl_bytes > b->ul_bytes + b->dl_bytes;
    });
    nlohmann::json top = nlohmann::json::array();
    for (std::size_t i = 0; i < ranked.size() && i < 10; ++i) {
        top.push_back({{"session", ranked[i]->id}, {"bytes", ranked[i]->ul_bytes + ranked[i]->dl_bytes}});
    }

    return {
        {"schema_version", kTrackingReportSchemaVersion},
        {"report_time_ms", now_ms},
        {"sessions", std::move(sessions)},
        {"top_talkers", std::move(top)},
        {"stats",
         {{"frames", stats_.frames},
          {"opaque_frames", stats_.opaque_frames},
          {"undecodable_frames", stats_.undecodable_frames},
          {"attributed_bytes", stats_.attributed_bytes},
          {"handovers_followed", stats_.handovers_followed},
          {"handovers_expired", stats_.handovers_expired}}},
    };
}

nlohmann::json Sniffer::finalize_report()
{
    correlate_paging(cfg_.paging_window_ms);
    return report(last_observed_);
}

} // namespace ltesim
