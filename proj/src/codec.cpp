#include "ltesim/codec.hpp"

#include "ltesim/rng.hpp"

#include <algorithm>

namespace ltesim {

namespace {

template <class... Ts>
struct overloaded : Ts...
{
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr std::array<std::string_view, kMessageTypeCount> kNames = {
    "mib",
    "sib1",
    "rach_preamble",
    "mac_rar",
    "rrc_connection_request",
    "rrc_connection_setup",
    "attach_request",
    "identity_request",
    "identity_response",
    "authentication_request",
    "authentication_response",
    "security_mode_command",
    "security_mode_complete",
    "attach_accept",
    "attach_reject",
    "tau_request",
    "tau_reject",
    "paging",
    "measurement_report",
    "rrc_connection_reconfiguration",
    "rrc_connection_reconfiguration_complete",
    "user_data",
};

constexpr std::uint8_t kTagImsi = 0x01;
constexpr std::uint8_t kTagImei = 0x02;
constexpr std::uint8_t kTagTmsi = 0x03;

class Writer
{
public:
    explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

    void u8(std::uint8_t v) { out_.push_back(v); }
    void i8(std::int8_t v) { out_.push_back(static_cast<std::uint8_t>(v)); }
    void u16(std::uint16_t v) { be(v, 2); }
    void u32(std::uint32_t v) { be(v, 4); }
    void u40(std::uint64_t v) { be(v, 5); }
    void u64(std::uint64_t v) { be(v, 8); }
    void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
    void zeros(std::size_t n) { out_.insert(out_.end(), n, 0); }

private:
    void be(std::uint64_t v, int width)
    {
        for (int i = width - 1; i >= 0; --i) {
            out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
        }
    }

    std::vector<std::uint8_t>& out_;
};

class Reader
{
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(be(1)); }
    std::int8_t i8() { return static_cast<std::int8_t>(u8()); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(be(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(be(4)); }
    std::uint64_t u40() { return be(5); }
    std::uint64_t u64() { return be(8); }
    std::span<const std::uint8_t> take(std::size_t n)
    {
        need(n);
        auto s = in_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    std::size_t remaining() const { return in_.size() - pos_; }

private:
    void need(std::size_t n) const
    {
        if (in_.size() - pos_ < n) {
            throw CodecError(CodecErrc::Truncated, "frame truncated");
        }
    }
    std::uint64_t be(int width)
    {
        need(static_cast<std::size_t>(width));
        std::uint64_t v = 0;
        for (int i = 0; i < width; ++i) {
            v = (v << 8) | in_[pos_++];
        }
        return v;
    }

    std::span<const std::uint8_t> in_;
    std::size_t pos_ = 0;
};

[[noreturn]] void invalid(const char* what)
{
    throw CodecError(CodecErrc::InvalidField, what);
}

[[noreturn]] void violation(const std::string& what)
{
    throw CodecError(CodecErrc::InvariantViolation, what);
}

int digit(char c) { return c - '0'; }

void write_plmn(Writer& w, const Plmn& p)
{
    std::uint8_t mnc3 = p.mnc.size() == 3 ? static_cast<std::uint8_t>(digit(p.mnc[2])) : 0x0F;
    w.u8(static_cast<std::uint8_t>(digit(p.mcc[1]) << 4 | digit(p.mcc[0])));
    w.u8(static_cast<std::uint8_t>(mnc3 << 4 | digit(p.mcc[2])));
    w.u8(static_cast<std::uint8_t>(digit(p.mnc[1]) << 4 | digit(p.mnc[0])));
}

char bcd_digit(std::uint8_t nibble)
{
    if (nibble > 9) {
        invalid("bcd nibble is not a digit");
    }
    return static_cast<char>('0' + nibble);
}

Plmn read_plmn(Reader& r)
{
    std::uint8_t b0 = r.u8(), b1 = r.u8(), b2 = r.u8();
    std::string mcc{bcd_digit(b0 & 0x0F), bcd_digit(b0 >> 4), bcd_digit(b1 & 0x0F)};
    std::string mnc{bcd_digit(b2 & 0x0F), bcd_digit(b2 >> 4)};
    if ((b1 >> 4) != 0x0F) {
        mnc.push_back(bcd_digit(b1 >> 4));
    }
    return Plmn{mcc, mnc};
}

// 15 digits packed two per byte, low nibble first, final high nibble 0xF.
void write_bcd15(Writer& w, const std::string& digits)
{
    for (std::size_t i = 0; i < 16; i += 2) {
        std::uint8_t lo = static_cast<std::uint8_t>(digit(digits[i]));
        std::uint8_t hi = i + 1 < 15 ? static_cast<std::uint8_t>(digit(digits[i + 1])) : 0x0F;
        w.u8(static_cast<std::uint8_t>(hi << 4 | lo));
    }
}

std::string read_bcd15(Reader& r)
{
    std::string out;
    auto b = r.take(8);
    for (std::size_t i = 0; i < 8; ++i) {
        out.push_back(bcd_digit(b[i] & 0x0F));
        if (i < 7) {
            out.push_back(bcd_digit(b[i] >> 4));
        } else if ((b[i] >> 4) != 0x0F) {
            invalid("bcd identity filler nibble");
        }
    }
    return out;
}

void write_imsi(Writer& w, const Imsi& imsi)
{
    w.u8(kTagImsi);
    w.u8(static_cast<std::uint8_t>(imsi.mnc_length()));
    write_bcd15(w, imsi.digits());
}

Imsi read_imsi_after_tag(Reader& r)
{
    int mnc_len = r.u8();
    std::string digits = read_bcd15(r);
    try {
        return Imsi::parse(digits, mnc_len);
    } catch (const IdentityError&) {
        invalid("imsi field");
    }
}

Imei read_imei_after_tag(Reader& r)
{
    return Imei::parse(read_bcd15(r));
}

void write_identity(Writer& w, const ImsiOrTmsi& id)
{
    std::visit(overloaded{
                   [&](const Imsi& imsi) { write_imsi(w, imsi); },
                   [&](const Tmsi& t) {
                       w.u8(kTagTmsi);
                       w.u32(t.value);
                   },
               },
               id);
}

void write_identity(Writer& w, const ImsiOrImei& id)
{
    std::visit(overloaded{
                   [&](const Imsi& imsi) { write_imsi(w, imsi); },
                   [&](const Imei& imei) {
                       w.u8(kTagImei);
                       write_bcd15(w, imei.digits());
                   },
               },
               id);
}

ImsiOrTmsi read_imsi_or_tmsi(Reader& r)
{
    switch (r.u8()) {
    case kTagImsi:
        return read_imsi_after_tag(r);
    case kTagTmsi:
        return Tmsi{r.u32()};
    default:
        invalid("identity tag not allowed here");
    }
}

ImsiOrImei read_imsi_or_imei(Reader& r)
{
    switch (r.u8()) {
    case kTagImsi:
        return read_imsi_after_tag(r);
    case kTagImei:
        return read_imei_after_tag(r);
    default:
        invalid("identity tag not allowed here");
    }
}

bool valid_bandwidth(std::uint8_t rb)
{
    switch (rb) {
    case 6:
    case 15:
    case 25:
    case 50:
    case 75:
    case 100:
        return true;
    default:
        return false;
    }
}

EmmCause read_cause(Reader& r)
{
    auto c = emm_cause_from_code(r.u8());
    if (!c) {
        invalid("unknown emm cause");
    }
    return *c;
}

void write_fields(Writer& w, const Message& m)
{
    std::visit(overloaded{
                   [&](const msg::Mib& x) {
                       w.u8(x.bandwidth_rb);
                       w.u16(x.sfn);
                   },
                   [&](const msg::Sib1& x) {
                       write_plmn(w, x.plmn);
                       w.u16(x.tac);
                       w.u32(x.cell_id);
                       w.i8(x.min_rx_level_dbm);
                       w.u8(static_cast<std::uint8_t>(x.priority_earfcns.size()));
                       for (const auto& p : x.priority_earfcns) {
                           w.u32(p.earfcn);
                           w.u8(p.priority);
                       }
                   },
                   [&](const msg::RachPreamble& x) { w.u8(x.preamble_id); },
                   [&](const msg::MacRar& x) {
                       w.u16(x.temp_rnti.value);
                       w.u16(x.timing_advance);
                       w.u32(x.uplink_grant);
                   },
                   [&](const msg::RrcConnectionRequest& x) {
                       std::visit(overloaded{
                                      [&](const Tmsi& t) {
                                          w.u8(0);
                                          w.u32(t.value);
                                      },
                                      [&](const RandomIdentity& rid) {
                                          w.u8(1);
                                          w.u40(rid.value);
                                      },
                                  },
                                  x.identity);
                   },
                   [&](const msg::RrcConnectionSetup&) {},
                   [&](const msg::AttachRequest& x) { write_identity(w, x.identity); },
                   [&](const msg::IdentityRequest& x) { w.u8(static_cast<std::uint8_t>(x.requested)); },
                   [&](const msg::IdentityResponse& x) { write_identity(w, x.identity); },
                   [&](const msg::AuthenticationRequest& x) {
                       w.bytes(x.rand);
                       w.bytes(x.autn);
                   },
                   [&](const msg::AuthenticationResponse& x) { w.u64(x.res); },
                   [&](const msg::SecurityModeCommand& x) { w.u32(x.key_id); },
                   [&](const msg::SecurityModeComplete&) {},
                   [&](const msg::AttachAccept& x) {
                       w.u32(x.tmsi.value);
                       w.u16(x.tac);
                   },
                   [&](const msg::AttachReject& x) { w.u8(emm_cause_code(x.emm_cause)); },
                   [&](const msg::TauRequest& x) {
                       w.u32(x.tmsi.value);
                       w.u16(x.tac);
                   },
                   [&](const msg::TauReject& x) { w.u8(emm_cause_code(x.emm_cause)); },
                   [&](const msg::Paging& x) { write_identity(w, x.identity); },
                   [&](const msg::MeasurementReport& x) {
                       w.u8(static_cast<std::uint8_t>(x.neighbors.size()));
                       for (const auto& n : x.neighbors) {
                           w.u32(n.cell_id);
                           w.i8(n.rsrp_dbm);
                       }
                   },
                   [&](const msg::RrcConnectionReconfiguration& x) {
                       w.u8(x.mobility ? 1 : 0);
                       if (x.mobility) {
                           w.u32(x.mobility->target_cell_id);
                           w.u16(x.mobility->new_rnti.value);
                       }
                   },
                   [&](const msg::RrcConnectionReconfigurationComplete&) {},
                   [&](const msg::UserData& x) {
                       w.u16(x.byte_count);
                       w.zeros(x.byte_count);
                   },
               },
               m);
}

Message read_message(Reader& r)
{
    std::uint8_t type = r.u8();
    switch (type) {
    case 0x01: {
        msg::Mib x;
        x.bandwidth_rb = r.u8();
        x.sfn = r.u16();
        if (!valid_bandwidth(x.bandwidth_rb) || x.sfn > 1023) {
            invalid("mib field out of range");
        }
        return x;
    }
    case 0x02: {
        msg::Sib1 x;
        x.plmn = read_plmn(r);
        x.tac = r.u16();
        x.cell_id = r.u32();
        if (x.cell_id > CellIdentity::kMaxCellId) {
            invalid("cell_id exceeds 28 bits");
        }
        x.min_rx_level_dbm = r.i8();
        std::uint8_t n = r.u8();
        for (std::uint8_t i = 0; i < n; ++i) {
            EarfcnPriority p;
            p.earfcn = r.u32();
            p.priority = r.u8();
            if (p.priority > 7) {
                invalid("earfcn priority above 7");
            }
            x.priority_earfcns.push_back(p);
        }
        return x;
    }
    case 0x03: {
        msg::RachPreamble x{r.u8()};
        if (x.preamble_id > 63) {
            invalid("preamble id exceeds 6 bits");
        }
        return x;
    }
    case 0x04: {
        msg::MacRar x;
        x.temp_rnti = Rnti{r.u16()};
        x.timing_advance = r.u16();
        x.uplink_grant = r.u32();
        if (!x.temp_rnti.is_device() || x.timing_advance > 2047 || x.uplink_grant > 0xFFFFF) {
            invalid("mac rar field out of range");
        }
        return x;
    }
    case 0x05: {
        msg::RrcConnectionRequest x;
        switch (r.u8()) {
        case 0:
            x.identity = Tmsi{r.u32()};
            break;
        case 1:
            x.identity = RandomIdentity{r.u40()};
            break;
        default:
            invalid("rrc identity kind");
        }
        return x;
    }
    case 0x06:
        return msg::RrcConnectionSetup{};
    case 0x07:
        return msg::AttachRequest{read_imsi_or_tmsi(r)};
    case 0x08: {
        std::uint8_t k = r.u8();
        if (k != 1 && k != 2) {
            invalid("identity request type");
        }
        return msg::IdentityRequest{static_cast<msg::IdentityType>(k)};
    }
    case 0x09:
        return msg::IdentityResponse{read_imsi_or_imei(r)};
    case 0x0A: {
        msg::AuthenticationRequest x;
        auto a = r.take(16);
        std::copy(a.begin(), a.end(), x.rand.begin());
        auto b = r.take(16);
        std::copy(b.begin(), b.end(), x.autn.begin());
        return x;
    }
    case 0x0B:
        return msg::AuthenticationResponse{r.u64()};
    case 0x0C:
        return msg::SecurityModeCommand{r.u32()};
    case 0x0D:
        return msg::SecurityModeComplete{};
    case 0x0E: {
        msg::AttachAccept x;
        x.tmsi = Tmsi{r.u32()};
        x.tac = r.u16();
        return x;
    }
    case 0x0F:
        return msg::AttachReject{read_cause(r)};
    case 0x10: {
        msg::TauRequest x;
        x.tmsi = Tmsi{r.u32()};
        x.tac = r.u16();
        return x;
    }
    case 0x11:
        return msg::TauReject{read_cause(r)};
    case 0x12:
        return msg::Paging{read_imsi_or_tmsi(r)};
    case 0x13: {
        msg::MeasurementReport x;
        std::uint8_t n = r.u8();
        for (std::uint8_t i = 0; i < n; ++i) {
            NeighborMeasurement m;
            m.cell_id = r.u32();
            m.rsrp_dbm = r.i8();
            if (m.cell_id > CellIdentity::kMaxCellId) {
                invalid("cell_id exceeds 28 bits");
            }
            x.neighbors.push_back(m);
        }
        return x;
    }
    case 0x14: {
        msg::RrcConnectionReconfiguration x;
        std::uint8_t present = r.u8();
        if (present > 1) {
            invalid("presence flag");
        }
        if (present) {
            MobilityControlInfo mci;
            mci.target_cell_id = r.u32();
            mci.new_rnti = Rnti{r.u16()};
            if (mci.target_cell_id > CellIdentity::kMaxCellId || !mci.new_rnti.is_device()) {
                invalid("mobility control info out of range");
            }
            x.mobility = mci;
        }
        return x;
    }
    case 0x15:
        return msg::RrcConnectionReconfigurationComplete{};
    case 0x16: {
        msg::UserData x{r.u16()};
        auto pad = r.take(x.byte_count);
        if (std::any_of(pad.begin(), pad.end(), [](std::uint8_t b) { return b != 0; })) {
            invalid("user data padding must be zero");
        }
        return x;
    }
    default:
        throw CodecError(CodecErrc::UnknownType, "unknown message type " + std::to_string(type));
    }
}

void apply_mask(std::span<std::uint8_t> data, std::uint64_t seed)
{
    auto ks = keystream(seed, data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        data[i] ^= ks[i];
    }
}

} // namespace

std::optional<EmmCause> emm_cause_from_code(std::uint8_t code)
{
    switch (code) {
    case 0x07:
        return EmmCause::EpsServicesNotAllowed;
    case 0x0B:
        return EmmCause::PlmnNotAllowed;
    case 0x16:
        return EmmCause::CongestionBenign;
    default:
        return std::nullopt;
    }
}

std::string_view emm_cause_name(EmmCause c)
{
    switch (c) {
    case EmmCause::EpsServicesNotAllowed:
        return "eps_services_not_allowed";
    case EmmCause::PlmnNotAllowed:
        return "plmn_not_allowed";
    case EmmCause::CongestionBenign:
        return "congestion";
    }
    return "unknown";
}

std::optional<EmmCause> emm_cause_from_name(std::string_view name)
{
    for (auto c : {EmmCause::EpsServicesNotAllowed, EmmCause::PlmnNotAllowed, EmmCause::CongestionBenign}) {
        if (emm_cause_name(c) == name) {
            return c;
        }
    }
    return std::nullopt;
}

std::string_view message_name(const Message& m)
{
    return kNames[m.index()];
}

std::string_view message_name_for_type(std::uint8_t type)
{
    if (type == 0 || type > kMessageTypeCount) {
        return "unknown";
    }
    return kNames[type - 1];
}

std::optional<std::uint8_t> message_type_from_name(std::string_view name)
{
    for (std::size_t i = 0; i < kNames.size(); ++i) {
        if (kNames[i] == name) {
            return static_cast<std::uint8_t>(i + 1);
        }
    }
    return std::nullopt;
}

bool is_broadcast(const Message& m)
{
    return std::holds_alternative<msg::Mib>(m) || std::holds_alternative<msg::Sib1>(m) ||
           std::holds_alternative<msg::Paging>(m);
}

bool is_pre_authentication(const Message& m)
{
    return std::visit(overloaded{
                          [](const msg::Mib&) { return true; },
                          [](const msg::Sib1&) { return true; },
                          [](const msg::RachPreamble&) { return true; },
                          [](const msg::MacRar&) { return true; },
                          [](const msg::RrcConnectionRequest&) { return true; },
                          [](const msg::RrcConnectionSetup&) { return true; },
                          [](const msg::AttachRequest&) { return true; },
                          [](const msg::IdentityRequest&) { return true; },
                          [](const msg::IdentityResponse&) { return true; },
                          [](const msg::AuthenticationRequest&) { return true; },
                          [](const msg::AuthenticationResponse&) { return true; },
                          [](const msg::AttachReject&) { return true; },
                          [](const msg::TauRequest&) { return true; },
                          [](const msg::TauReject&) { return true; },
                          [](const msg::Paging&) { return true; },
                          [](const auto&) { return false; },
                      },
                      m);
}

std::vector<std::uint8_t> keystream(std::uint64_t seed, std::size_t length)
{
    std::vector<std::uint8_t> out;
    out.reserve(length);
    std::uint64_t state = seed;
    while (out.size() < length) {
        state += 0x9e3779b97f4a7c15ULL;
        std::uint64_t word = mix64(state);
        for (int i = 0; i < 8 && out.size() < length; ++i) {
            out.push_back(static_cast<std::uint8_t>(word >> (8 * i)));
        }
    }
    return out;
}

void validate(const FrameHeader& header, const Message& m)
{
    if (header.cell_id > CellIdentity::kMaxCellId) {
        violation("header cell_id exceeds 28 bits");
    }
    if (is_broadcast(m) && (header.rnti.value != Rnti::kBroadcast || is_protected(header.protection))) {
        violation(std::string(message_name(m)) + " must be cleartext on the broadcast rnti");
    }
    auto check = [](bool ok, const char* what) {
        if (!ok) {
            violation(what);
        }
    };
    auto check_plmn = [&](const Plmn& p) {
        auto digits = [](const std::string& s) {
            return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
        };
        check(p.mcc.size() == 3 && (p.mnc.size() == 2 || p.mnc.size() == 3) && digits(p.mcc) && digits(p.mnc),
              "plmn digits");
    };
    std::visit(overloaded{
                   [&](const msg::Mib& x) {
                       check(valid_bandwidth(x.bandwidth_rb), "mib bandwidth");
                       check(x.sfn <= 1023, "mib sfn exceeds 10 bits");
                   },
                   [&](const msg::Sib1& x) {
                       check_plmn(x.plmn);
                       check(x.cell_id <= CellIdentity::kMaxCellId, "sib1 cell_id exceeds 28 bits");
                       check(x.priority_earfcns.size() <= 255, "sib1 priority list too long");
                       for (const auto& p : x.priority_earfcns) {
                           check(p.priority <= 7, "sib1 priority above 7");
                       }
                   },
                   [&](const msg::RachPreamble& x) { check(x.preamble_id <= 63, "preamble id exceeds 6 bits"); },
                   [&](const msg::MacRar& x) {
                       check(x.temp_rnti.is_device(), "mac rar temp rnti outside device range");
                       check(x.timing_advance <= 2047, "timing advance exceeds 11 bits");
                       check(x.uplink_grant <= 0xFFFFF, "uplink grant exceeds 20 bits");
                   },
                   [&](const msg::RrcConnectionRequest& x) {
                       if (auto* rid = std::get_if<RandomIdentity>(&x.identity)) {
                           check(rid->value < (1ULL << 40), "random identity exceeds 40 bits");
                       }
                   },
                   [&](const msg::Paging& x) {
                       if (auto* imsi = std::get_if<Imsi>(&x.identity)) {
                           check(imsi->digits().size() == 15, "paging imsi");
                       }
                   },
                   [&](const msg::MeasurementReport& x) {
                       check(x.neighbors.size() <= 255, "measurement report too long");
                       for (const auto& n : x.neighbors) {
                           check(n.cell_id <= CellIdentity::kMaxCellId, "measurement cell_id exceeds 28 bits");
                       }
                   },
                   [&](const msg::RrcConnectionReconfiguration& x) {
                       if (x.mobility) {
                           check(x.mobility->target_cell_id <= CellIdentity::kMaxCellId, "target cell exceeds 28 bits");
                           check(x.mobility->new_rnti.is_device(), "new rnti outside device range");
                       }
                   },
                   [](const auto&) {},
               },
               m);
}

std::vector<std::uint8_t> encode_body(const Message& m)
{
    std::vector<std::uint8_t> out;
    Writer w(out);
    w.u8(message_type(m));
    write_fields(w, m);
    return out;
}

std::vector<std::uint8_t> encode_header(const FrameHeader& header)
{
    if (header.cell_id > CellIdentity::kMaxCellId) {
        violation("header cell_id exceeds 28 bits");
    }
    std::vector<std::uint8_t> out;
    out.reserve(32);
    Writer w(out);
    w.u64(header.timestamp_ms);
    w.u32(header.cell_id);
    w.u16(header.rnti.value);
    w.u8(static_cast<std::uint8_t>(header.direction));
    if (const auto* p = std::get_if<Protected>(&header.protection)) {
        w.u8(1);
        w.u32(p->key_id);
    } else {
        w.u8(0);
    }
    return out;
}

std::vector<std::uint8_t> encode(const FrameHeader& header, const Message& m, std::uint64_t keystream_seed)
{
    validate(header, m);
    std::vector<std::uint8_t> out = encode_header(header);
    std::size_t start = out.size();
    Writer w(out);
    w.u8(message_type(m));
    write_fields(w, m);
    if (is_protected(header.protection)) {
        apply_mask(std::span(out).subspan(start), keystream_seed);
    }
    return out;
}

FrameHeader decode_header(std::span<const std::uint8_t> bytes)
{
    Reader r(bytes);
    FrameHeader h;
    h.timestamp_ms = r.u64();
    h.cell_id = r.u32();
    if (h.cell_id > CellIdentity::kMaxCellId) {
        invalid("header cell_id exceeds 28 bits");
    }
    h.rnti = Rnti{r.u16()};
    std::uint8_t dir = r.u8();
    if (dir > 1) {
        invalid("header direction");
    }
    h.direction = static_cast<Direction>(dir);
    std::uint8_t prot = r.u8();
    if (prot == 0) {
        h.protection = Cleartext{};
    } else if (prot == 1) {
        h.protection = Protected{r.u32()};
    } else {
        invalid("header protection marker");
    }
    return h;
}

DecodeResult decode(std::span<const std::uint8_t> bytes, const KeyTable& keys)
{
    if (bytes.size() < FrameHeader::kSize) {
        throw CodecError(CodecErrc::Truncated, "frame shorter than header");
    }
    FrameHeader h = decode_header(bytes);
    std::size_t body_start = FrameHeader::kSize;
    std::vector<std::uint8_t> unmasked;
    std::span<const std::uint8_t> body;
    if (const auto* p = std::get_if<Protected>(&h.protection)) {
        body_start += 4;
        auto it = keys.find(p->key_id);
        if (it == keys.end()) {
            return OpaqueFrame{h, bytes.size() - FrameHeader::kSize};
        }
        unmasked.assign(bytes.begin() + static_cast<std::ptrdiff_t>(body_start), bytes.end());
        apply_mask(unmasked, it->second);
        body = unmasked;
    } else {
        body = bytes.subspan(body_start);
    }
    Reader r(body);
    Message m = read_message(r);
    if (r.remaining() != 0) {
        throw CodecError(CodecErrc::TrailingBytes, "trailing bytes after message");
    }
    if (is_broadcast(m) && (h.rnti.value != Rnti::kBroadcast || is_protected(h.protection))) {
        invalid("broadcast message on a dedicated rnti");
    }
    return DecodedFrame{h, std::move(m)};
}

} // namespace ltesim
