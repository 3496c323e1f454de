#include "ltesim/capture_json.hpp"
#include "ltesim/codec.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace ltesim;
using ltesim::testing::random_frame;
using ltesim::testing::random_message;

namespace {

using ByteVec = std::vector<std::uint8_t>;

CodecErrc decode_error(const ByteVec& bytes)
{
    try {
        (void)decode(bytes);
    } catch (const CodecError& e) {
        return e.code();
    }
    ADD_FAILURE() << "decode accepted the input";
    return CodecErrc::InvariantViolation;
}

CodecErrc encode_error(const FrameHeader& h, const Message& m)
{
    try {
        (void)encode(h, m, 1);
    } catch (const CodecError& e) {
        return e.code();
    }
    ADD_FAILURE() << "encode accepted the input";
    return CodecErrc::Truncated;
}

FrameHeader unicast(Direction dir = Direction::Downlink)
{
    FrameHeader h;
    h.timestamp_ms = 1;
    h.cell_id = 50;
    h.rnti = Rnti{99};
    h.direction = dir;
    return h;
}

} // namespace

TEST(Codec, AttachRejectBodyIsHandEncoded)
{
    EXPECT_EQ(encode_body(msg::AttachReject{EmmCause::PlmnNotAllowed}), (ByteVec{0x0F, 0x0B}));
    EXPECT_EQ(encode_body(msg::TauReject{EmmCause::EpsServicesNotAllowed}), (ByteVec{0x11, 0x07}));
    EXPECT_EQ(encode_body(msg::AttachReject{EmmCause::CongestionBenign}), (ByteVec{0x0F, 0x16}));
}

TEST(Codec, ReconfigurationCarriesPresenceFlagCellAndRnti)
{
    msg::RrcConnectionReconfiguration r{MobilityControlInfo{50, Rnti{10848}}};
    EXPECT_EQ(encode_body(r), (ByteVec{0x14, 0x01, 0x00, 0x00, 0x00, 0x32, 0x2A, 0x60}));
    EXPECT_EQ(encode_body(msg::RrcConnectionReconfiguration{}), (ByteVec{0x14, 0x00}));
}

TEST(Codec, HeaderLayout)
{
    FrameHeader h;
    h.timestamp_ms = 0x0102030405060708ULL;
    h.cell_id = 0x0ABCDEF1;
    h.rnti = Rnti{0x2A60};
    h.direction = Direction::Uplink;
    auto bytes = encode(h, msg::SecurityModeComplete{});
    EXPECT_EQ(bytes, (ByteVec{0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07, 0x08, 0x0A, 0xBC, 0xDE, 0xF1, 0x2A, 0x60,
                              0x01, 0x00, 0x0D}));
}

TEST(Codec, PlmnBcd)
{
    msg::Sib1 sib{Plmn{"310", "150"}, 7, 50, -120, {}};
    auto body = encode_body(sib);
    ASSERT_GE(body.size(), 4U);
    EXPECT_EQ(body[1], 0x13);
    EXPECT_EQ(body[2], 0x00);
    EXPECT_EQ(body[3], 0x51);

    msg::Sib1 two{Plmn{"001", "01"}, 7, 50, -120, {}};
    auto b2 = encode_body(two);
    EXPECT_EQ(b2[1], 0x00);
    EXPECT_EQ(b2[2], 0xF1);
    EXPECT_EQ(b2[3], 0x10);
}

TEST(Codec, ImsiIdentityEncoding)
{
    auto body = encode_body(msg::AttachRequest{Imsi::parse("310150123456789", 3)});
    EXPECT_EQ(body, (ByteVec{0x07, 0x01, 0x03, 0x13, 0x10, 0x05, 0x21, 0x43, 0x65, 0x87, 0xF9}));
}

TEST(Codec, UserDataZeroRoundTrips)
{
    auto h = unicast(Direction::Uplink);
    Message m = msg::UserData{0};
    EXPECT_EQ(encode_body(m), (ByteVec{0x16, 0x00, 0x00}));
    auto bytes = encode(h, m);
    auto decoded = std::get<DecodedFrame>(decode(bytes));
    EXPECT_EQ(decoded.header, h);
    EXPECT_EQ(decoded.message, m);
}

TEST(Codec, UserDataLengthReflectsVolume)
{
    EXPECT_EQ(encode_body(msg::UserData{300}).size(), 303U);
}

TEST(Codec, RoundTripProperty10k)
{
    Rng rng(1234);
    std::set<std::uint8_t> types_seen;
    for (int i = 0; i < 10000; ++i) {
        auto f = random_frame(rng);
        types_seen.insert(message_type(f.message));
        KeyTable keys;
        if (const auto* p = std::get_if<Protected>(&f.header.protection)) {
            keys[p->key_id] = f.seed;
        }
        auto bytes = encode(f.header, f.message, f.seed);
        auto result = decode(bytes, keys);
        auto* decoded = std::get_if<DecodedFrame>(&result);
        ASSERT_NE(decoded, nullptr) << "case " << i;
        ASSERT_EQ(decoded->header, f.header) << "case " << i;
        ASSERT_EQ(decoded->message, f.message) << "case " << i << " type " << int(message_type(f.message));
        ASSERT_EQ(encode(decoded->header, decoded->message, f.seed), bytes);
    }
    EXPECT_EQ(types_seen.size(), kMessageTypeCount);
}

// Every variant can be encoded and names map back to their wire type.
TEST(Codec, EveryVariantHasNameAndType)
{
    Rng rng(3);
    for (std::uint8_t t = 1; t <= kMessageTypeCount; ++t) {
        auto m = random_message(rng, t);
        EXPECT_EQ(message_type(m), t);
        EXPECT_EQ(message_type_from_name(message_name(m)), t);
        EXPECT_EQ(encode_body(m).front(), t);
    }
    EXPECT_FALSE(message_type_from_name("bogus").has_value());
}

TEST(Codec, EncodeIsInjective)
{
    Rng rng(99);
    std::map<ByteVec, std::pair<FrameHeader, Message>> seen;
    for (int i = 0; i < 5000; ++i) {
        auto f = random_frame(rng);
        if (is_protected(f.header.protection)) {
            continue;
        }
        auto bytes = encode(f.header, f.message);
        auto [it, fresh] = seen.emplace(bytes, std::make_pair(f.header, f.message));
        if (!fresh) {
            ASSERT_EQ(it->second.first, f.header);
            ASSERT_EQ(it->second.second, f.message);
        }
    }
}

TEST(Codec, ProtectedWithoutKeyIsOpaqueWithReadableHeader)
{
    auto h = unicast();
    h.timestamp_ms = 4242;
    h.protection = Protected{0xCAFE};
    Message m = msg::AttachAccept{Tmsi{7}, 9};
    auto bytes = encode(h, m, 555);
    auto result = decode(bytes);
    auto* opaque = std::get_if<OpaqueFrame>(&result);
    ASSERT_NE(opaque, nullptr);
    EXPECT_EQ(opaque->header, h);
    EXPECT_EQ(opaque->header.rnti, Rnti{99});
    EXPECT_EQ(opaque->header.cell_id, 50U);
    EXPECT_EQ(opaque->body_length, bytes.size() - FrameHeader::kSize);

    auto full = decode(bytes, KeyTable{{0xCAFE, 555}});
    EXPECT_EQ(std::get<DecodedFrame>(full).message, m);
}

TEST(Codec, ProtectedBodyIsMasked)
{
    auto h = unicast();
    h.protection = Protected{1};
    auto bytes = encode(h, msg::UserData{64}, 77);
    const ByteVec masked(bytes.begin() + 20, bytes.end());
    auto clear = encode_body(msg::UserData{64});
    EXPECT_NE(masked, clear);
    auto ks = keystream(77, clear.size());
    for (std::size_t i = 0; i < clear.size(); ++i) {
        ASSERT_EQ(masked[i], clear[i] ^ ks[i]);
    }
}

TEST(Codec, ThreeBytesIsTruncated)
{
    EXPECT_EQ(decode_error({0x00, 0x01, 0x02}), CodecErrc::Truncated);
}

TEST(Codec, MalformedBodies)
{
    auto h = unicast();
    auto bytes = encode(h, msg::AuthenticationResponse{5});
    bytes.pop_back();
    EXPECT_EQ(decode_error(bytes), CodecErrc::Truncated);

    bytes = encode(h, msg::SecurityModeComplete{});
    bytes.push_back(0);
    EXPECT_EQ(decode_error(bytes), CodecErrc::TrailingBytes);

    bytes = encode(h, msg::SecurityModeComplete{});
    bytes.back() = 0x40;
    EXPECT_EQ(decode_error(bytes), CodecErrc::UnknownType);

    bytes = encode(h, msg::AttachReject{});
    bytes.back() = 0x01;
    EXPECT_EQ(decode_error(bytes), CodecErrc::InvalidField);
}

TEST(Codec, InvariantViolations)
{
    auto h = unicast();
    FrameHeader bcast;
    EXPECT_EQ(encode_error(h, msg::Mib{}), CodecErrc::InvariantViolation);
    EXPECT_EQ(encode_error(bcast, msg::Mib{7, 0}), CodecErrc::InvariantViolation);
    EXPECT_EQ(encode_error(bcast, msg::Mib{50, 1024}), CodecErrc::InvariantViolation);
    EXPECT_EQ(encode_error(h, msg::RachPreamble{64}), CodecErrc::InvariantViolation);
    EXPECT_EQ(encode_error(h, msg::MacRar{Rnti{0}, 0, 0}), CodecErrc::InvariantViolation);
    EXPECT_EQ(encode_error(h, msg::RrcConnectionReconfiguration{MobilityControlInfo{50, Rnti{0xFFF4}}}),
              CodecErrc::InvariantViolation);
    auto big = h;
    big.cell_id = CellIdentity::kMaxCellId + 1;
    EXPECT_EQ(encode_error(big, msg::SecurityModeComplete{}), CodecErrc::InvariantViolation);
    auto prot_bcast = bcast;
    prot_bcast.protection = Protected{1};
    EXPECT_EQ(encode_error(prot_bcast, msg::Sib1{}), CodecErrc::InvariantViolation);
}

TEST(Codec, PreAuthenticationBoundary)
{
    const std::set<std::uint8_t> pre{0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07, 0x08,
                                     0x09, 0x0A, 0x0B, 0x0F, 0x10, 0x11, 0x12};
    Rng rng(0);
    for (std::uint8_t t = 1; t <= kMessageTypeCount; ++t) {
        EXPECT_EQ(is_pre_authentication(random_message(rng, t)), pre.contains(t)) << message_name_for_type(t);
    }
    EXPECT_TRUE(is_pre_authentication(msg::AttachRequest{}));
    EXPECT_FALSE(is_pre_authentication(msg::SecurityModeComplete{}));
    EXPECT_TRUE(is_pre_authentication(msg::Paging{}));
}

TEST(Codec, EmmCauseTable)
{
    EXPECT_EQ(emm_cause_code(EmmCause::PlmnNotAllowed), 0x0B);
    EXPECT_EQ(emm_cause_code(EmmCause::EpsServicesNotAllowed), 0x07);
    EXPECT_EQ(emm_cause_code(EmmCause::CongestionBenign), 0x16);
    EXPECT_EQ(emm_cause_from_code(0x0B), EmmCause::PlmnNotAllowed);
    EXPECT_FALSE(emm_cause_from_code(0x01).has_value());
    for (auto c : {EmmCause::PlmnNotAllowed, EmmCause::EpsServicesNotAllowed, EmmCause::CongestionBenign}) {
        EXPECT_EQ(emm_cause_from_name(emm_cause_name(c)), c);
    }
}

TEST(CaptureJson, RoundTripsEveryFrame)
{
    Rng rng(42);
    for (int i = 0; i < 3000; ++i) {
        auto f = random_frame(rng);
        auto bytes = encode(f.header, f.message, f.seed);
        auto rec = capture_record(bytes, -71.5);
        auto line = capture_to_json(rec);
        auto back = capture_from_json(nlohmann::json::parse(line.dump()));
        ASSERT_EQ(back.header, rec.header);
        ASSERT_EQ(back.message, rec.message);
        ASSERT_EQ(back.body_length, rec.body_length);
        ASSERT_EQ(back.rx_dbm, rec.rx_dbm);
        // What an observer without keys saw is re-materialized exactly.
        const auto observed = capture_to_frame_bytes(back);
        ASSERT_EQ(observed.size(), bytes.size());
        ASSERT_EQ(decode_header(observed), f.header);
        if (!is_protected(f.header.protection)) {
            ASSERT_EQ(observed, bytes);
        }
    }
}

TEST(CaptureJson, OpaqueLineShape)
{
    auto h = unicast();
    h.protection = Protected{0x10};
    auto rec = capture_record(encode(h, msg::UserData{10}, 3), std::nullopt);
    auto j = capture_to_json(rec);
    EXPECT_EQ(j.at("type"), "opaque");
    EXPECT_EQ(j.at("prot"), "protected");
    EXPECT_EQ(j.at("rnti"), "0x0063");
    EXPECT_EQ(j.at("dir"), "dl");
    EXPECT_FALSE(j.contains("body"));
    EXPECT_FALSE(j.contains("rx"));
}
