#pragma once

// Control-plane message set and its binary wire grammar.
//
// Frame layout (all integers big-endian):
//
//   header (16 bytes)
//     0  u64  timestamp_ms
//     8  u32  cell_id          upper 4 bits zero
//    12  u16  rnti             0x0000 for broadcast / pre-assignment frames
//    14  u8   direction        0 = downlink, 1 = uplink
//    15  u8   protection       0 = cleartext, 1 = protected
//   body
//     cleartext:  type(u8) fields...
//     protected:  key_id(u32) then type(u8) fields... XOR-masked with the
//                 keystream of key_id
//
// Body grammar, fields in declaration order:
//
//   0x01 Mib                     bandwidth_rb u8 {6,15,25,50,75,100}, sfn u16 (<1024)
//   0x02 Sib1                    plmn[3], tac u16, cell_id u32, min_rx_level_dbm i8,
//                                count u8, count x (earfcn u32, priority u8 (<8))
//   0x03 RachPreamble            preamble_id u8 (<64)
//   0x04 MacRar                  temp_rnti u16, timing_advance u16 (<2048), uplink_grant u32 (<2^20)
//   0x05 RrcConnectionRequest    kind u8 (0 tmsi, 1 random), tmsi u32 | random u40
//   0x06 RrcConnectionSetup      -
//   0x07 AttachRequest           mobile identity (IMSI or TMSI)
//   0x08 IdentityRequest         requested u8 (1 IMSI, 2 IMEI)
//   0x09 IdentityResponse        mobile identity (IMSI or IMEI)
//   0x0A AuthenticationRequest   rand[16], autn[16]
//   0x0B AuthenticationResponse  res u64
//   0x0C SecurityModeCommand     key_id u32
//   0x0D SecurityModeComplete    -
//   0x0E AttachAccept            tmsi u32, tac u16
//   0x0F AttachReject            emm_cause u8
//   0x10 TauRequest              tmsi u32, tac u16
//   0x11 TauReject               emm_cause u8
//   0x12 Paging                  mobile identity (IMSI or TMSI)
//   0x13 MeasurementReport       count u8, count x (cell_id u32, rsrp_dbm i8)
//   0x14 RrcConnectionReconfiguration
//                                present u8 (0/1), [target_cell_id u32, new_rnti u16]
//   0x15 RrcConnectionReconfigurationComplete  -
//   0x16 UserData                byte_count u16, byte_count zero bytes (payload volume)
//
//   plmn[3]          BCD: (mcc2<<4|mcc1), (mnc3<<4|mcc3) with mnc3=0xF for 2-digit MNC,
//                    (mnc2<<4|mnc1)
//   mobile identity  tag u8: 0x01 IMSI -> mnc_len u8, 8 BCD bytes (15 digits + 0xF filler)
//                            0x02 IMEI -> 8 BCD bytes
//                            0x03 TMSI -> u32
//
// EMM cause codes: PlmnNotAllowed 0x0B, EpsServicesNotAllowed 0x07,
// CongestionBenign 0x16.

#include "ltesim/identity.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ltesim {

enum class CodecErrc
{
    InvariantViolation,
    Truncated,
    UnknownType,
    TrailingBytes,
    InvalidField,
};

class CodecError : public std::runtime_error
{
public:
    CodecError(CodecErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    CodecErrc code() const noexcept { return code_; }

private:
    CodecErrc code_;
};

enum class Direction : std::uint8_t
{
    Downlink = 0,
    Uplink = 1,
};

struct Cleartext
{
    bool operator==(const Cleartext&) const = default;
};

struct Protected
{
    std::uint32_t key_id = 0;
    bool operator==(const Protected&) const = default;
};

using Protection = std::variant<Cleartext, Protected>;

inline bool is_protected(const Protection& p) { return std::holds_alternative<Protected>(p); }

struct FrameHeader
{
    static constexpr std::size_t kSize = 16;

    std::uint64_t timestamp_ms = 0;
    std::uint32_t cell_id = 0;
    Rnti rnti;
    Direction direction = Direction::Downlink;
    Protection protection = Cleartext{};

    bool operator==(const FrameHeader&) const = default;
};

enum class EmmCause : std::uint8_t
{
    EpsServicesNotAllowed = 0x07,
    PlmnNotAllowed = 0x0B,
    CongestionBenign = 0x16,
};

std::optional<EmmCause> emm_cause_from_code(std::uint8_t code);
constexpr std::uint8_t emm_cause_code(EmmCause c) { return static_cast<std::uint8_t>(c); }
std::string_view emm_cause_name(EmmCause c);
std::optional<EmmCause> emm_cause_from_name(std::string_view name);

using Bytes16 = std::array<std::uint8_t, 16>;
using ImsiOrTmsi = std::variant<Imsi, Tmsi>;
using ImsiOrImei = std::variant<Imsi, Imei>;

struct RandomIdentity
{
    std::uint64_t value = 0; // 40 bits
    bool operator==(const RandomIdentity&) const = default;
};

using RrcIdentity = std::variant<Tmsi, RandomIdentity>;

struct EarfcnPriority
{
    std::uint32_t earfcn = 0;
    std::uint8_t priority = 0;
    bool operator==(const EarfcnPriority&) const = default;
};

struct NeighborMeasurement
{
    std::uint32_t cell_id = 0;
    std::int8_t rsrp_dbm = 0;
    bool operator==(const NeighborMeasurement&) const = default;
};

struct MobilityControlInfo
{
    std::uint32_t target_cell_id = 0;
    Rnti new_rnti;
    bool operator==(const MobilityControlInfo&) const = default;
};

namespace msg {

struct Mib
{
    std::uint8_t bandwidth_rb = 50;
    std::uint16_t sfn = 0;
    bool operator==(const Mib&) const = default;
};

struct Sib1
{
    Plmn plmn;
    std::uint16_t tac = 0;
    std::uint32_t cell_id = 0;
    std::int8_t min_rx_level_dbm = -120;
    std::vector<EarfcnPriority> priority_earfcns;
    bool operator==(const Sib1&) const = default;
};

struct RachPreamble
{
    std::uint8_t preamble_id = 0;
    bool operator==(const RachPreamble&) const = default;
};

struct MacRar
{
    Rnti temp_rnti;
    std::uint16_t timing_advance = 0;
    std::uint32_t uplink_grant = 0;
    bool operator==(const MacRar&) const = default;
};

struct RrcConnectionRequest
{
    RrcIdentity identity = RandomIdentity{};
    bool operator==(const RrcConnectionRequest&) const = default;
};

struct RrcConnectionSetup
{
    bool operator==(const RrcConnectionSetup&) const = default;
};

struct AttachRequest
{
    ImsiOrTmsi identity = Tmsi{};
    bool operator==(const AttachRequest&) const = default;
};

enum class IdentityType : std::uint8_t
{
    Imsi = 1,
    Imei = 2,
};

struct IdentityRequest
{
    IdentityType requested = IdentityType::Imsi;
    bool operator==(const IdentityRequest&) const = default;
};

struct IdentityResponse
{
    ImsiOrImei identity = Imei::parse("000000000000000");
    bool operator==(const IdentityResponse&) const = default;
};

struct AuthenticationRequest
{
    Bytes16 rand{};
    Bytes16 autn{};
    bool operator==(const AuthenticationRequest&) const = default;
};

struct AuthenticationResponse
{
    std::uint64_t res = 0;
    bool operator==(const AuthenticationResponse&) const = default;
};

struct SecurityModeCommand
{
    std::uint32_t key_id = 0;
    bool operator==(const SecurityModeCommand&) const = default;
};

struct SecurityModeComplete
{
    bool operator==(const SecurityModeComplete&) const = default;
};

struct AttachAccept
{
    Tmsi tmsi;
    std::uint16_t tac = 0;
    bool operator==(const AttachAccept&) const = default;
};

struct AttachReject
{
    EmmCause emm_cause = EmmCause::PlmnNotAllowed;
    bool operator==(const AttachReject&) const = default;
};

struct TauRequest
{
    Tmsi tmsi;
    std::uint16_t tac = 0;
    bool operator==(const TauRequest&) const = default;
};

struct TauReject
{
    EmmCause emm_cause = EmmCause::PlmnNotAllowed;
    bool operator==(const TauReject&) const = default;
};

struct Paging
{
    ImsiOrTmsi identity = Tmsi{};
    bool operator==(const Paging&) const = default;
};

struct MeasurementReport
{
    std::vector<NeighborMeasurement> neighbors;
    bool operator==(const MeasurementReport&) const = default;
};

struct RrcConnectionReconfiguration
{
    std::optional<MobilityControlInfo> mobility;
    bool operator==(const RrcConnectionReconfiguration&) const = default;
};

struct RrcConnectionReconfigurationComplete
{
    bool operator==(const RrcConnectionReconfigurationComplete&) const = default;
};

struct UserData
{
    std::uint16_t byte_count = 0;
    bool operator==(const UserData&) const = default;
};

} // namespace msg

// Variant order is the wire type order: index + 1 == type byte.
using Message = std::variant<
    msg::Mib,
    msg::Sib1,
    msg::RachPreamble,
    msg::MacRar,
    msg::RrcConnectionRequest,
    msg::RrcConnectionSetup,
    msg::AttachRequest,
    msg::IdentityRequest,
    msg::IdentityResponse,
    msg::AuthenticationRequest,
    msg::AuthenticationResponse,
    msg::SecurityModeCommand,
    msg::SecurityModeComplete,
    msg::AttachAccept,
    msg::AttachReject,
    msg::TauRequest,
    msg::TauReject,
    msg::Paging,
    msg::MeasurementReport,
    msg::RrcConnectionReconfiguration,
    msg::RrcConnectionReconfigurationComplete,
    msg::UserData>;

constexpr std::size_t kMessageTypeCount = std::variant_size_v<Message>;

inline std::uint8_t message_type(const Message& m) { return static_cast<std::uint8_t>(m.index() + 1); }

/// snake_case name used in capture logs, e.g. "attach_request".
std::string_view message_name(const Message& m);
std::string_view message_name_for_type(std::uint8_t type);
std::optional<std::uint8_t> message_type_from_name(std::string_view name);

bool is_broadcast(const Message& m);

/// True for every message the protocol exchanges before authentication
/// completes, i.e. the messages a UE cannot verify.
bool is_pre_authentication(const Message& m);

/// key_id -> keystream seed, for the receiver side of protected frames.
using KeyTable = std::map<std::uint32_t, std::uint64_t>;

/// Keystream bytes derived from a seed; shared by the masking on both sides.
std::vector<std::uint8_t> keystream(std::uint64_t seed, std::size_t length);

/// Throws CodecError{InvariantViolation} if any field is out of its range.
void validate(const FrameHeader& header, const Message& m);

/// Encode a frame. For protected frames the keystream seed for the header's
/// key_id must be supplied.
std::vector<std::uint8_t> encode(const FrameHeader& header, const Message& m, std::uint64_t keystream_seed = 0);

/// Header bytes, including the key_id prefix of protected bodies.
std::vector<std::uint8_t> encode_header(const FrameHeader& header);

/// Encode the message body alone (type byte + fields), unmasked.
std::vector<std::uint8_t> encode_body(const Message& m);

struct DecodedFrame
{
    FrameHeader header;
    Message message;
    bool operator==(const DecodedFrame&) const = default;
};

/// A protected frame whose key the decoder does not hold. The header is still
/// fully readable.
struct OpaqueFrame
{
    FrameHeader header;
    std::size_t body_length = 0;
    bool operator==(const OpaqueFrame&) const = default;
};

using DecodeResult = std::variant<DecodedFrame, OpaqueFrame>;

/// Decode a frame. Protected frames decode fully iff their key_id is in keys.
/// Throws CodecError{Truncated, UnknownType, TrailingBytes, InvalidField}.
DecodeResult decode(std::span<const std::uint8_t> bytes, const KeyTable& keys = {});

FrameHeader decode_header(std::span<const std::uint8_t> bytes);

} // namespace ltesim
