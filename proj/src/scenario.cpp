#include "ltesim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace ltesim {

using nlohmann::json;

namespace {

// A JSON node together with its path, so every error can name its field.
class Node
{
public:
    Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

    const std::string& path() const { return path_; }
    const json& raw() const { return *j_; }

    [[noreturn]] void fail(const std::string& message) const { throw ScenarioInvalid(path_, message); }

    bool has(const char* key) const { return j_->is_object() && j_->contains(key) && !j_->at(key).is_null(); }

    Node at(const char* key) const
    {
        if (!j_->is_object()) {
            fail("expected an object");
        }
        if (!has(key)) {
            throw ScenarioInvalid(child(key), "missing");
        }
        return Node(j_->at(key), child(key));
    }

    std::vector<Node> items() const
    {
        if (!j_->is_array()) {
            fail("expected an array");
        }
        std::vector<Node> out;
        for (std::size_t i = 0; i < j_->size(); ++i) {
            out.emplace_back((*j_)[i], path_ + "[" + std::to_string(i) + "]");
        }
        return out;
    }

    std::vector<Node> items_or_empty(const char* key) const
    {
        return has(key) ? at(key).items() : std::vector<Node>{};
    }

    std::int64_t integer(std::int64_t lo, std::int64_t hi) const
    {
        if (!j_->is_number_integer()) {
            fail("expected an integer");
        }
        std::int64_t v = 0;
        if (j_->is_number_unsigned()) {
            auto u = j_->get<std::uint64_t>();
            if (u > static_cast<std::uint64_t>(hi)) {
                fail("out of range");
            }
            v = static_cast<std::int64_t>(u);
        } else {
            v = j_->get<std::int64_t>();
        }
        if (v < lo || v > hi) {
            fail("must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        }
        return v;
    }

    std::uint64_t u64() const
    {
        if (!j_->is_number_unsigned() && !(j_->is_number_integer() && j_->get<std::int64_t>() >= 0)) {
            fail("expected a non-negative integer");
        }
        return j_->get<std::uint64_t>();
    }

    double number() const
    {
        if (!j_->is_number()) {
            fail("expected a number");
        }
        double v = j_->get<double>();
        if (!std::isfinite(v)) {
            fail("must be finite");
        }
        return v;
    }

    bool boolean() const
    {
        if (!j_->is_boolean()) {
            fail("expected true or false");
        }
        return j_->get<bool>();
    }

    std::string string() const
    {
        if (!j_->is_string()) {
            fail("expected a string");
        }
        return j_->get<std::string>();
    }

    template <class F>
    auto parse(F&& f) const
    {
        try {
            return f(string());
        } catch (const IdentityError& e) {
            fail(e.what());
        } catch (const std::invalid_argument& e) {
            fail(e.what());
        }
    }

private:
    std::string child(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

    const json* j_;
    std::string path_;
};

Position position_of(const Node& n)
{
    return Position{n.at("x").number(), n.at("y").number()};
}

Plmn plmn_of(const Node& n)
{
    const auto mcc = n.at("mcc").string();
    const auto mnc = n.at("mnc").string();
    try {
        return Plmn::parse(mcc, mnc);
    } catch (const IdentityError& e) {
        n.fail(e.what());
    }
}

std::vector<EarfcnPriority> priorities_of(const Node& parent)
{
    std::vector<EarfcnPriority> out;
    for (const auto& p : parent.items_or_empty("priority_earfcns")) {
        out.push_back({static_cast<std::uint32_t>(p.at("earfcn").integer(0, UINT32_MAX)),
                       static_cast<std::uint8_t>(p.at("priority").integer(0, 7))});
    }
    if (out.size() > 255) {
        parent.at("priority_earfcns").fail("at most 255 entries");
    }
    return out;
}

std::uint32_t cell_id_of(const Node& n)
{
    return static_cast<std::uint32_t>(n.at("cell_id").integer(0, CellIdentity::kMaxCellId));
}

std::int8_t tx_of(const Node& n, std::int8_t fallback)
{
    return n.has("tx_power_dbm") ? static_cast<std::int8_t>(n.at("tx_power_dbm").integer(-20, 60)) : fallback;
}

EmmCause cause_of(const Node& n)
{
    auto name = n.string();
    auto c = emm_cause_from_name(name);
    if (!c) {
        n.fail("unknown EMM cause '" + name + "'");
    }
    return *c;
}

CellConfig parse_cell(const Node& n)
{
    CellConfig c;
    c.radio.identity.cell_id = cell_id_of(n);
    c.radio.identity.tac = static_cast<std::uint16_t>(n.at("tac").integer(0, 0xFFFF));
    c.radio.identity.plmn = plmn_of(n.at("plmn"));
    c.radio.identity.earfcn = static_cast<std::uint32_t>(n.at("earfcn").integer(0, UINT32_MAX));
    c.radio.position = position_of(n.at("position"));
    c.radio.tx_power_dbm = tx_of(n, 43);
    c.radio.rat = Rat::Lte;
    if (n.has("broadcast_period_ms")) {
        c.broadcast_period_ms = static_cast<std::uint64_t>(n.at("broadcast_period_ms").integer(1, INT64_MAX));
    }
    if (n.has("encrypt_handover_trigger")) {
        c.encrypt_handover_trigger = n.at("encrypt_handover_trigger").boolean();
    }
    if (n.has("rnti_refresh_on_idle")) {
        c.rnti_refresh_on_idle = n.at("rnti_refresh_on_idle").boolean();
    }
    if (n.has("handover_hysteresis_db")) {
        c.handover_hysteresis_db = n.at("handover_hysteresis_db").number();
    }
    if (n.has("min_rx_level_dbm")) {
        c.min_rx_level_dbm = static_cast<std::int8_t>(n.at("min_rx_level_dbm").integer(-128, 127));
    }
    c.priority_earfcns = priorities_of(n);
    if (n.has("bandwidth_rb")) {
        auto bw = n.at("bandwidth_rb");
        auto v = bw.integer(0, 255);
        if (v != 6 && v != 15 && v != 25 && v != 50 && v != 75 && v != 100) {
            bw.fail("must be one of 6, 15, 25, 50, 75, 100");
        }
        c.bandwidth_rb = static_cast<std::uint8_t>(v);
    }
    for (const auto& r : n.items_or_empty("forced_rntis")) {
        c.forced_rntis.push_back(Rnti{static_cast<std::uint16_t>(r.integer(Rnti::kMinDevice, Rnti::kMaxDevice))});
    }
    return c;
}

GsmCellSpec parse_gsm_cell(const Node& n)
{
    GsmCellSpec g;
    g.cell.identity.cell_id = cell_id_of(n);
    g.cell.identity.plmn = plmn_of(n.at("plmn"));
    if (n.has("tac")) {
        g.cell.identity.tac = static_cast<std::uint16_t>(n.at("tac").integer(0, 0xFFFF));
    }
    if (n.has("arfcn")) {
        g.cell.identity.earfcn = static_cast<std::uint32_t>(n.at("arfcn").integer(0, UINT32_MAX));
    }
    g.cell.position = position_of(n.at("position"));
    g.cell.tx_power_dbm = tx_of(n, 40);
    g.cell.rat = Rat::Gsm;
    if (n.has("rogue")) {
        g.rogue = n.at("rogue").boolean();
    }
    return g;
}

std::vector<Waypoint> parse_waypoints(const Node& ue)
{
    std::vector<Waypoint> out;
    for (const auto& w : ue.items_or_empty("waypoints")) {
        Waypoint wp{w.at("t").u64(), position_of(w)};
        if (!out.empty() && wp.t_ms < out.back().t_ms) {
            w.at("t").fail("waypoints must be time-sorted");
        }
        out.push_back(wp);
    }
    return out;
}

Direction direction_of(const Node& item)
{
    if (!item.has("dir")) {
        return Direction::Uplink;
    }
    auto d = item.at("dir");
    auto s = d.string();
    if (s == "ul") {
        return Direction::Uplink;
    }
    if (s == "dl") {
        return Direction::Downlink;
    }
    d.fail("must be \"ul\" or \"dl\"");
}

std::vector<TrafficItem> parse_traffic(const Node& ue, std::uint64_t duration)
{
    std::vector<TrafficItem> out;
    for (const auto& item : ue.items_or_empty("app_traffic")) {
        out.push_back({item.at("t").u64(), static_cast<std::uint16_t>(item.at("bytes").integer(0, 0xFFFF)),
                       direction_of(item)});
    }
    for (const auto& p : ue.items_or_empty("periodic_traffic")) {
        const auto period = static_cast<std::uint64_t>(p.at("period_ms").integer(1, INT64_MAX));
        const auto bytes = static_cast<std::uint16_t>(p.at("bytes").integer(0, 0xFFFF));
        const auto start = p.has("start_ms") ? p.at("start_ms").u64() : 0;
        const auto until = p.has("until_ms") ? p.at("until_ms").u64() : duration;
        const auto dir = direction_of(p);
        for (auto t = start; t < until; t += period) {
            out.push_back({t, bytes, dir});
        }
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.t_ms < b.t_ms; });
    return out;
}

std::vector<Directive> parse_directives(const Node& ue, const Msisdn& own)
{
    std::vector<Directive> out;
    for (const auto& d : ue.items_or_empty("directives")) {
        Directive dir;
        dir.t_ms = d.at("t").u64();
        auto kind = d.at("kind");
        auto k = kind.string();
        if (k == "erase_tmsi") {
            dir.kind = DirectiveKind::EraseTmsi;
        } else if (k == "airplane_toggle") {
            dir.kind = DirectiveKind::AirplaneToggle;
        } else if (k == "page") {
            dir.kind = DirectiveKind::Page;
            dir.msisdn = d.has("msisdn") ? d.at("msisdn").parse([](const std::string& s) { return Msisdn::parse(s); })
                                         : own;
        } else {
            kind.fail("unknown directive '" + k + "'");
        }
        out.push_back(std::move(dir));
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.t_ms < b.t_ms; });
    return out;
}

SubscriberKey key_of(const Node& n)
{
    return n.parse([](const std::string& s) { return parse_key_hex(s); });
}

UeSpec parse_ue(const Node& n, int mnc_length, std::uint64_t duration)
{
    const auto imsi = n.at("imsi").parse([&](const std::string& s) { return Imsi::parse(s, mnc_length); });
    const auto msisdn = n.at("msisdn").parse([](const std::string& s) { return Msisdn::parse(s); });
    const auto imei = n.at("imei").parse([](const std::string& s) { return Imei::parse(s); });
    UeConfig cfg{imsi, key_of(n.at("key")), msisdn, imei, false, {}};
    if (n.has("reject_requires_integrity")) {
        cfg.reject_requires_integrity = n.at("reject_requires_integrity").boolean();
    }
    UeSpec ue{std::move(cfg), position_of(n.at("position")), {}, {}, {}, 0, std::nullopt};
    ue.waypoints = parse_waypoints(n);
    ue.traffic = parse_traffic(n, duration);
    ue.directives = parse_directives(n, msisdn);
    if (n.has("power_on_ms")) {
        ue.power_on_ms = n.at("power_on_ms").u64();
    }
    if (n.has("tmsi")) {
        ue.initial_tmsi = n.at("tmsi").parse([](const std::string& s) { return parse_tmsi_hex(s); });
    }
    return ue;
}

RogueConfig parse_rogue(const Node& n)
{
    RogueConfig r;
    r.spoofed.cell_id = cell_id_of(n);
    r.spoofed.tac = static_cast<std::uint16_t>(n.at("tac").integer(0, 0xFFFF));
    r.spoofed.plmn = plmn_of(n.at("plmn"));
    r.spoofed.earfcn = static_cast<std::uint32_t>(n.at("earfcn").integer(0, UINT32_MAX));
    const auto priority = static_cast<std::uint8_t>(n.has("priority") ? n.at("priority").integer(0, 7) : 7);
    r.injection = EarfcnPriority{r.spoofed.earfcn, priority};
    r.priority_earfcns = priorities_of(n);
    auto mode = n.at("mode");
    auto m = rogue_mode_from_name(mode.string());
    if (!m) {
        mode.fail("unknown rogue mode '" + mode.string() + "'");
    }
    r.mode = *m;
    if (n.has("cause")) {
        r.cause = cause_of(n.at("cause"));
    }
    r.tx_power_dbm = tx_of(n, 43);
    r.position = position_of(n.at("position"));
    if (n.has("min_rx_level_dbm")) {
        r.min_rx_level_dbm = static_cast<std::int8_t>(n.at("min_rx_level_dbm").integer(-128, 127));
    }
    if (n.has("broadcast_period_ms")) {
        r.broadcast_period_ms = static_cast<std::uint64_t>(n.at("broadcast_period_ms").integer(1, INT64_MAX));
    }
    if (n.has("active_from_ms")) {
        r.active_from_ms = n.at("active_from_ms").u64();
    }
    if (n.has("active_until_ms")) {
        r.active_until_ms = n.at("active_until_ms").u64();
        if (*r.active_until_ms < r.active_from_ms) {
            n.at("active_until_ms").fail("before active_from_ms");
        }
    }
    return r;
}

} // namespace

Scenario parse_scenario(const json& doc)
{
    const Node root(doc, "");
    if (!doc.is_object()) {
        throw ScenarioInvalid("$", "scenario must be a JSON object");
    }
    Scenario sc;
    sc.seed = root.at("seed").u64();
    sc.duration_ms = root.at("duration_ms").u64();
    if (root.has("mnc_length")) {
        sc.mnc_length = static_cast<int>(root.at("mnc_length").integer(2, 3));
    }
    if (root.has("radio")) {
        auto radio = root.at("radio");
        if (radio.has("floor_dbm")) {
            sc.floor_dbm = radio.at("floor_dbm").number();
        }
        if (radio.has("path_loss_exponent")) {
            sc.path_loss.exponent = radio.at("path_loss_exponent").number();
            if (sc.path_loss.exponent <= 0) {
                radio.at("path_loss_exponent").fail("must be positive");
            }
        }
        if (radio.has("offset_db")) {
            sc.path_loss.offset_db = radio.at("offset_db").number();
        }
    }

    std::set<std::uint32_t> cell_ids;
    auto claim_id = [&](const Node& n, std::uint32_t id) {
        if (!cell_ids.insert(id).second) {
            n.at("cell_id").fail("duplicate cell_id " + std::to_string(id));
        }
    };
    for (const auto& c : root.items_or_empty("cells")) {
        sc.cells.push_back(parse_cell(c));
        claim_id(c, sc.cells.back().identity().cell_id);
    }
    for (const auto& g : root.items_or_empty("gsm_cells")) {
        sc.gsm_cells.push_back(parse_gsm_cell(g));
        claim_id(g, sc.gsm_cells.back().cell.identity.cell_id);
    }

    std::set<std::string> imsis;
    for (const auto& u : root.items_or_empty("ues")) {
        sc.ues.push_back(parse_ue(u, sc.mnc_length, sc.duration_ms));
        if (!imsis.insert(sc.ues.back().config.imsi.digits()).second) {
            u.at("imsi").fail("duplicate IMSI");
        }
    }

    if (root.has("hss")) {
        std::set<std::string> seen;
        for (const auto& h : root.at("hss").items()) {
            auto imsi = h.at("imsi").parse([&](const std::string& s) { return Imsi::parse(s, sc.mnc_length); });
            auto msisdn = h.at("msisdn").parse([](const std::string& s) { return Msisdn::parse(s); });
            if (!seen.insert(imsi.digits()).second) {
                h.at("imsi").fail("duplicate IMSI in HSS");
            }
            sc.hss.push_back({imsi, key_of(h.at("key")), msisdn});
        }
    } else {
        for (std::size_t i = 0; i < sc.ues.size(); ++i) {
            const Node u = root.at("ues").items()[i];
            if (u.has("provisioned") && !u.at("provisioned").boolean()) {
                continue;
            }
            const auto& cfg = sc.ues[i].config;
            sc.hss.push_back({cfg.imsi, cfg.key, cfg.msisdn});
        }
    }
    for (std::size_t i = 0; i < sc.ues.size(); ++i) {
        if (!sc.ues[i].initial_tmsi) {
            continue;
        }
        bool provisioned = std::any_of(sc.hss.begin(), sc.hss.end(),
                                       [&](const HssRecord& h) { return h.imsi == sc.ues[i].config.imsi; });
        if (!provisioned) {
            throw ScenarioInvalid("ues[" + std::to_string(i) + "].tmsi", "TMSI given for an unprovisioned IMSI");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (sc.ues[j].initial_tmsi == sc.ues[i].initial_tmsi) {
                throw ScenarioInvalid("ues[" + std::to_string(i) + "].tmsi", "duplicate TMSI");
            }
        }
    }

    if (root.has("rogue")) {
        auto r = root.at("rogue");
        sc.rogue = parse_rogue(r);
        claim_id(r, sc.rogue->spoofed.cell_id);
    }
    if (root.has("sniffer")) {
        auto s = root.at("sniffer");
        if (s.has("enabled")) {
            sc.sniffer.enabled = s.at("enabled").boolean();
        }
        if (s.has("position")) {
            sc.sniffer.position = position_of(s.at("position"));
        }
    }
    return sc;
}

Scenario load_scenario(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ScenarioInvalid("$", "cannot open " + path);
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ScenarioInvalid("$", std::string("not valid JSON: ") + e.what());
    }
    return parse_scenario(doc);
}

Position position_at(const UeSpec& ue, std::uint64_t t_ms)
{
    Waypoint prev{0, ue.position};
    for (const auto& w : ue.waypoints) {
        if (t_ms < w.t_ms) {
            if (w.t_ms == prev.t_ms) {
                return w.position;
            }
            const double f = static_cast<double>(t_ms - prev.t_ms) / static_cast<double>(w.t_ms - prev.t_ms);
            return Position{prev.position.x + f * (w.position.x - prev.position.x),
                            prev.position.y + f * (w.position.y - prev.position.y)};
        }
        prev = w;
    }
    return prev.position;
}

} // namespace ltesim
