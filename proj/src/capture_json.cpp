#include "ltesim/capture_json.hpp"

#include "ltesim/keyed_stub.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace ltesim {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts...
{
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

[[noreturn]] void bad(const std::string& what)
{
    throw CodecError(CodecErrc::InvalidField, "capture json: " + what);
}

json identity_json(const ImsiOrTmsi& id)
{
    return std::visit(overloaded{
                          [](const Imsi& i) { return json{{"imsi", i.digits()}, {"mnc_len", i.mnc_length()}}; },
                          [](const Tmsi& t) { return json{{"tmsi", to_hex(t)}}; },
                      },
                      id);
}

json identity_json(const ImsiOrImei& id)
{
    return std::visit(overloaded{
                          [](const Imsi& i) { return json{{"imsi", i.digits()}, {"mnc_len", i.mnc_length()}}; },
                          [](const Imei& e) { return json{{"imei", e.digits()}}; },
                      },
                      id);
}

template <class T>
T get(const json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key)) {
        bad(std::string("missing field ") + key);
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        bad(std::string("bad field ") + key);
    }
}

template <class T>
T get_int(const json& j, const char* key, long long lo, long long hi)
{
    auto v = get<long long>(j, key);
    if (v < lo || v > hi) {
        bad(std::string("field out of range: ") + key);
    }
    return static_cast<T>(v);
}

Imsi imsi_from(const json& j)
{
    try {
        return Imsi::parse(get<std::string>(j, "imsi"), get_int<int>(j, "mnc_len", 2, 3));
    } catch (const IdentityError& e) {
        bad(e.what());
    }
}

ImsiOrTmsi imsi_or_tmsi(const json& j)
{
    if (j.contains("imsi")) {
        return imsi_from(j);
    }
    try {
        return parse_tmsi_hex(get<std::string>(j, "tmsi"));
    } catch (const IdentityError& e) {
        bad(e.what());
    }
}

ImsiOrImei imsi_or_imei(const json& j)
{
    if (j.contains("imsi")) {
        return imsi_from(j);
    }
    try {
        return Imei::parse(get<std::string>(j, "imei"));
    } catch (const IdentityError& e) {
        bad(e.what());
    }
}

Bytes16 bytes16(const json& j, const char* key)
{
    auto s = get<std::string>(j, key);
    try {
        return parse_key_hex(s);
    } catch (const std::invalid_argument&) {
        bad(std::string("bad hex in ") + key);
    }
}

Rnti rnti_from(const json& j, const char* key)
{
    try {
        return parse_rnti_hex(get<std::string>(j, key));
    } catch (const IdentityError& e) {
        bad(e.what());
    }
}

EmmCause cause_from(const json& j)
{
    auto c = emm_cause_from_name(get<std::string>(j, "emm_cause"));
    if (!c) {
        bad("unknown emm_cause");
    }
    return *c;
}

std::uint32_t hex32(const json& j, const char* key)
{
    try {
        return parse_tmsi_hex(get<std::string>(j, key)).value;
    } catch (const IdentityError& e) {
        bad(e.what());
    }
}

std::string hex32_str(std::uint32_t v)
{
    return to_hex(Tmsi{v});
}

std::string hex64_str(std::uint64_t v)
{
    char buf[24];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t hex64(const json& j, const char* key)
{
    auto s = get<std::string>(j, key);
    std::string_view sv(s);
    if (sv.starts_with("0x")) {
        sv.remove_prefix(2);
    }
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), v, 16);
    if (sv.empty() || ec != std::errc{} || p != sv.data() + sv.size()) {
        bad(std::string("bad hex in ") + key);
    }
    return v;
}

} // namespace

json message_to_json(const Message& m)
{
    return std::visit(
        overloaded{
            [](const msg::Mib& x) { return json{{"bandwidth_rb", x.bandwidth_rb}, {"sfn", x.sfn}}; },
            [](const msg::Sib1& x) {
                json pri = json::array();
                for (const auto& p : x.priority_earfcns) {
                    pri.push_back(json{{"earfcn", p.earfcn}, {"priority", p.priority}});
                }
                return json{{"mcc", x.plmn.mcc},
                            {"mnc", x.plmn.mnc},
                            {"tac", x.tac},
                            {"cell_id", x.cell_id},
                            {"min_rx_level_dbm", x.min_rx_level_dbm},
                            {"priority_earfcns", pri}};
            },
            [](const msg::RachPreamble& x) { return json{{"preamble_id", x.preamble_id}}; },
            [](const msg::MacRar& x) {
                return json{{"temp_rnti", to_hex(x.temp_rnti)},
                            {"timing_advance", x.timing_advance},
                            {"uplink_grant", x.uplink_grant}};
            },
            [](const msg::RrcConnectionRequest& x) {
                return std::visit(overloaded{
                                      [](const Tmsi& t) { return json{{"tmsi", to_hex(t)}}; },
                                      [](const RandomIdentity& r) { return json{{"random", hex64_str(r.value)}}; },
                                  },
                                  x.identity);
            },
            [](const msg::RrcConnectionSetup&) { return json::object(); },
            [](const msg::AttachRequest& x) { return identity_json(x.identity); },
            [](const msg::IdentityRequest& x) {
                return json{{"requested", x.requested == msg::IdentityType::Imsi ? "imsi" : "imei"}};
            },
            [](const msg::IdentityResponse& x) { return identity_json(x.identity); },
            [](const msg::AuthenticationRequest& x) {
                return json{{"rand", to_hex(x.rand)}, {"autn", to_hex(x.autn)}};
            },
            [](const msg::AuthenticationResponse& x) { return json{{"res", hex64_str(x.res)}}; },
            [](const msg::SecurityModeCommand& x) { return json{{"key_id", hex32_str(x.key_id)}}; },
            [](const msg::SecurityModeComplete&) { return json::object(); },
            [](const msg::AttachAccept& x) { return json{{"tmsi", to_hex(x.tmsi)}, {"tac", x.tac}}; },
            [](const msg::AttachReject& x) { return json{{"emm_cause", emm_cause_name(x.emm_cause)}}; },
            [](const msg::TauRequest& x) { return json{{"tmsi", to_hex(x.tmsi)}, {"tac", x.tac}}; },
            [](const msg::TauReject& x) { return json{{"emm_cause", emm_cause_name(x.emm_cause)}}; },
            [](const msg::Paging& x) { return identity_json(x.identity); },
            [](const msg::MeasurementReport& x) {
                json n = json::array();
                for (const auto& e : x.neighbors) {
                    n.push_back(json{{"cell_id", e.cell_id}, {"rsrp_dbm", e.rsrp_dbm}});
                }
                return json{{"neighbors", n}};
            },
            [](const msg::RrcConnectionReconfiguration& x) {
                if (!x.mobility) {
                    return json{{"mobility", nullptr}};
                }
                return json{{"mobility",
                             {{"target_cell_id", x.mobility->target_cell_id},
                              {"new_rnti", to_hex(x.mobility->new_rnti)}}}};
            },
            [](const msg::RrcConnectionReconfigurationComplete&) { return json::object(); },
            [](const msg::UserData& x) { return json{{"byte_count", x.byte_count}}; },
        },
        m);
}

Message message_from_json(std::string_view type, const json& b)
{
    auto t = message_type_from_name(type);
    if (!t) {
        throw CodecError(CodecErrc::UnknownType, "capture json: unknown message type " + std::string(type));
    }
    switch (*t) {
    case 0x01:
        return msg::Mib{get_int<std::uint8_t>(b, "bandwidth_rb", 0, 255), get_int<std::uint16_t>(b, "sfn", 0, 1023)};
    case 0x02: {
        msg::Sib1 x;
        try {
            x.plmn = Plmn::parse(get<std::string>(b, "mcc"), get<std::string>(b, "mnc"));
        } catch (const IdentityError& e) {
            bad(e.what());
        }
        x.tac = get_int<std::uint16_t>(b, "tac", 0, 0xFFFF);
        x.cell_id = get_int<std::uint32_t>(b, "cell_id", 0, CellIdentity::kMaxCellId);
        x.min_rx_level_dbm = get_int<std::int8_t>(b, "min_rx_level_dbm", -128, 127);
        for (const auto& p : get<json>(b, "priority_earfcns")) {
            x.priority_earfcns.push_back(
                {get_int<std::uint32_t>(p, "earfcn", 0, UINT32_MAX), get_int<std::uint8_t>(p, "priority", 0, 7)});
        }
        return x;
    }
    case 0x03:
        return msg::RachPreamble{get_int<std::uint8_t>(b, "preamble_id", 0, 63)};
    case 0x04:
        return msg::MacRar{rnti_from(b, "temp_rnti"), get_int<std::uint16_t>(b, "timing_advance", 0, 2047),
                           get_int<std::uint32_t>(b, "uplink_grant", 0, 0xFFFFF)};
    case 0x05:
        if (b.contains("tmsi")) {
            return msg::RrcConnectionRequest{Tmsi{hex32(b, "tmsi")}};
        }
        return msg::RrcConnectionRequest{RandomIdentity{hex64(b, "random")}};
    case 0x06:
        return msg::RrcConnectionSetup{};
    case 0x07:
        return msg::AttachRequest{imsi_or_tmsi(b)};
    case 0x08: {
        auto r = get<std::string>(b, "requested");
        if (r != "imsi" && r != "imei") {
            bad("identity request type");
        }
        return msg::IdentityRequest{r == "imsi" ? msg::IdentityType::Imsi : msg::IdentityType::Imei};
    }
    case 0x09:
        return msg::IdentityResponse{imsi_or_imei(b)};
    case 0x0A:
        return msg::AuthenticationRequest{bytes16(b, "rand"), bytes16(b, "autn")};
    case 0x0B:
        return msg::AuthenticationResponse{hex64(b, "res")};
    case 0x0C:
        return msg::SecurityModeCommand{hex32(b, "key_id")};
    case 0x0D:
        return msg::SecurityModeComplete{};
    case 0x0E:
        return msg::AttachAccept{Tmsi{hex32(b, "tmsi")}, get_int<std::uint16_t>(b, "tac", 0, 0xFFFF)};
    case 0x0F:
        return msg::AttachReject{cause_from(b)};
    case 0x10:
        return msg::TauRequest{Tmsi{hex32(b, "tmsi")}, get_int<std::uint16_t>(b, "tac", 0, 0xFFFF)};
    case 0x11:
        return msg::TauReject{cause_from(b)};
    case 0x12:
        return msg::Paging{imsi_or_tmsi(b)};
    case 0x13: {
        msg::MeasurementReport x;
        for (const auto& n : get<json>(b, "neighbors")) {
            x.neighbors.push_back({get_int<std::uint32_t>(n, "cell_id", 0, CellIdentity::kMaxCellId),
                                   get_int<std::int8_t>(n, "rsrp_dbm", -128, 127)});
        }
        return x;
    }
    case 0x14: {
        msg::RrcConnectionReconfiguration x;
        const json& mob = get<json>(b, "mobility");
        if (!mob.is_null()) {
            x.mobility = MobilityControlInfo{get_int<std::uint32_t>(mob, "target_cell_id", 0, CellIdentity::kMaxCellId),
                                             rnti_from(mob, "new_rnti")};
        }
        return x;
    }
    case 0x15:
        return msg::RrcConnectionReconfigurationComplete{};
    case 0x16:
        return msg::UserData{get_int<std::uint16_t>(b, "byte_count", 0, 0xFFFF)};
    }
    throw CodecError(CodecErrc::UnknownType, "capture json: unhandled type");
}

CaptureRecord capture_record(std::span<const std::uint8_t> frame, std::optional<double> rx_dbm)
{
    CaptureRecord rec;
    rec.body_length = frame.size() - FrameHeader::kSize;
    rec.rx_dbm = rx_dbm;
    auto decoded = decode(frame, {});
    if (auto* d = std::get_if<DecodedFrame>(&decoded)) {
        rec.header = d->header;
        rec.message = std::move(d->message);
    } else {
        rec.header = std::get<OpaqueFrame>(decoded).header;
    }
    return rec;
}

json capture_to_json(const CaptureRecord& rec)
{
    json j;
    j["t"] = rec.header.timestamp_ms;
    j["cell"] = rec.header.cell_id;
    j["rnti"] = to_hex(rec.header.rnti);
    j["dir"] = rec.header.direction == Direction::Downlink ? "dl" : "ul";
    if (const auto* p = std::get_if<Protected>(&rec.header.protection)) {
        j["prot"] = "protected";
        j["key_id"] = hex32_str(p->key_id);
    } else {
        j["prot"] = "clear";
    }
    j["len"] = rec.body_length;
    if (rec.message) {
        j["type"] = message_name(*rec.message);
        j["body"] = message_to_json(*rec.message);
    } else {
        j["type"] = "opaque";
    }
    if (rec.rx_dbm) {
        // Two decimals keeps log lines stable and readable.
        j["rx"] = std::round(*rec.rx_dbm * 100.0) / 100.0;
    }
    return j;
}

CaptureRecord capture_from_json(const json& j)
{
    CaptureRecord rec;
    rec.header.timestamp_ms = get<std::uint64_t>(j, "t");
    rec.header.cell_id = get_int<std::uint32_t>(j, "cell", 0, CellIdentity::kMaxCellId);
    rec.header.rnti = rnti_from(j, "rnti");
    auto dir = get<std::string>(j, "dir");
    if (dir != "dl" && dir != "ul") {
        bad("dir");
    }
    rec.header.direction = dir == "dl" ? Direction::Downlink : Direction::Uplink;
    auto prot = get<std::string>(j, "prot");
    if (prot == "protected") {
        rec.header.protection = Protected{hex32(j, "key_id")};
    } else if (prot == "clear") {
        rec.header.protection = Cleartext{};
    } else {
        bad("prot");
    }
    rec.body_length = get<std::size_t>(j, "len");
    auto type = get<std::string>(j, "type");
    if (type != "opaque") {
        rec.message = message_from_json(type, get<json>(j, "body"));
    }
    if (j.contains("rx")) {
        rec.rx_dbm = get<double>(j, "rx");
    }
    return rec;
}

std::vector<std::uint8_t> capture_to_frame_bytes(const CaptureRecord& rec)
{
    if (rec.message) {
        if (is_protected(rec.header.protection)) {
            bad("decoded message on a protected frame; observer logs hold no keys");
        }
        auto bytes = encode(rec.header, *rec.message);
        if (bytes.size() - FrameHeader::kSize != rec.body_length) {
            bad("len does not match re-encoded body");
        }
        return bytes;
    }
    const auto* p = std::get_if<Protected>(&rec.header.protection);
    if (!p || rec.body_length < 4) {
        bad("opaque record must be protected with a key_id");
    }
    std::vector<std::uint8_t> out = encode_header(rec.header);
    out.resize(FrameHeader::kSize + rec.body_length, 0);
    return out;
}

} // namespace ltesim
