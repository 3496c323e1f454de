#pragma once

#include "ltesim/codec.hpp"
#include "ltesim/identity.hpp"
#include "ltesim/rng.hpp"
#include "ltesim/scenario.hpp"
#include "ltesim/simulator.hpp"

#include <json.hpp>

#include <cstdio>
#include <string>
#include <vector>

namespace ltesim::testing {

using nlohmann::json;

inline std::string digits(Rng& rng, std::size_t n)
{
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
        s.push_back(static_cast<char>('0' + rng.below(10)));
    }
    return s;
}

inline Plmn random_plmn(Rng& rng)
{
    return Plmn::parse(digits(rng, 3), digits(rng, rng.below(2) == 0 ? 2 : 3));
}

inline Imsi random_imsi(Rng& rng)
{
    return Imsi::parse(digits(rng, 15), rng.below(2) == 0 ? 2 : 3);
}

inline Bytes16 random_bytes16(Rng& rng)
{
    Bytes16 b{};
    for (auto& x : b) {
        x = static_cast<std::uint8_t>(rng.below(256));
    }
    return b;
}

inline std::uint32_t random_cell_id(Rng& rng)
{
    return static_cast<std::uint32_t>(rng.below(CellIdentity::kMaxCellId + 1ULL));
}

inline Rnti random_device_rnti(Rng& rng)
{
    return Rnti{static_cast<std::uint16_t>(rng.between(Rnti::kMinDevice, Rnti::kMaxDevice))};
}

inline EmmCause random_cause(Rng& rng)
{
    constexpr EmmCause all[] = {EmmCause::EpsServicesNotAllowed, EmmCause::PlmnNotAllowed, EmmCause::CongestionBenign};
    return all[rng.below(3)];
}

/// A valid message of the given wire type, fields drawn across their full ranges.
inline Message random_message(Rng& rng, std::uint8_t type)
{
    switch (type) {
    case 0x01: {
        constexpr std::uint8_t bw[] = {6, 15, 25, 50, 75, 100};
        return msg::Mib{bw[rng.below(6)], static_cast<std::uint16_t>(rng.below(1024))};
    }
    case 0x02: {
        msg::Sib1 s{random_plmn(rng), static_cast<std::uint16_t>(rng.below(65536)), random_cell_id(rng),
                    static_cast<std::int8_t>(static_cast<int>(rng.below(256)) - 128), {}};
        const auto n = rng.below(6);
        for (std::uint64_t i = 0; i < n; ++i) {
            s.priority_earfcns.push_back({static_cast<std::uint32_t>(rng.next()), static_cast<std::uint8_t>(rng.below(8))});
        }
        return s;
    }
    case 0x03:
        return msg::RachPreamble{static_cast<std::uint8_t>(rng.below(64))};
    case 0x04:
        return msg::MacRar{random_device_rnti(rng), static_cast<std::uint16_t>(rng.below(2048)),
                           static_cast<std::uint32_t>(rng.below(1u << 20))};
    case 0x05:
        if (rng.below(2) == 0) {
            return msg::RrcConnectionRequest{Tmsi{static_cast<std::uint32_t>(rng.next())}};
        }
        return msg::RrcConnectionRequest{RandomIdentity{rng.below(1ULL << 40)}};
    case 0x06:
        return msg::RrcConnectionSetup{};
    case 0x07:
        if (rng.below(2) == 0) {
            return msg::AttachRequest{random_imsi(rng)};
        }
        return msg::AttachRequest{Tmsi{static_cast<std::uint32_t>(rng.next())}};
    case 0x08:
        return msg::IdentityRequest{rng.below(2) == 0 ? msg::IdentityType::Imsi : msg::IdentityType::Imei};
    case 0x09:
        if (rng.below(2) == 0) {
            return msg::IdentityResponse{random_imsi(rng)};
        }
        return msg::IdentityResponse{Imei::parse(digits(rng, 15))};
    case 0x0A:
        return msg::AuthenticationRequest{random_bytes16(rng), random_bytes16(rng)};
    case 0x0B:
        return msg::AuthenticationResponse{rng.next()};
    case 0x0C:
        return msg::SecurityModeCommand{static_cast<std::uint32_t>(rng.next())};
    case 0x0D:
        return msg::SecurityModeComplete{};
    case 0x0E:
        return msg::AttachAccept{Tmsi{static_cast<std::uint32_t>(rng.next())}, static_cast<std::uint16_t>(rng.below(65536))};
    case 0x0F:
        return msg::AttachReject{random_cause(rng)};
    case 0x10:
        return msg::TauRequest{Tmsi{static_cast<std::uint32_t>(rng.next())}, static_cast<std::uint16_t>(rng.below(65536))};
    case 0x11:
        return msg::TauReject{random_cause(rng)};
    case 0x12:
        if (rng.below(2) == 0) {
            return msg::Paging{random_imsi(rng)};
        }
        return msg::Paging{Tmsi{static_cast<std::uint32_t>(rng.next())}};
    case 0x13: {
        msg::MeasurementReport r;
        const auto n = rng.below(9);
        for (std::uint64_t i = 0; i < n; ++i) {
            r.neighbors.push_back({random_cell_id(rng), static_cast<std::int8_t>(static_cast<int>(rng.below(256)) - 128)});
        }
        return r;
    }
    case 0x14:
        if (rng.below(3) == 0) {
            return msg::RrcConnectionReconfiguration{};
        }
        return msg::RrcConnectionReconfiguration{MobilityControlInfo{random_cell_id(rng), random_device_rnti(rng)}};
    case 0x15:
        return msg::RrcConnectionReconfigurationComplete{};
    default:
        return msg::UserData{static_cast<std::uint16_t>(rng.below(rng.below(4) == 0 ? 65536 : 64))};
    }
}

struct RandomFrame
{
    FrameHeader header;
    Message message;
    std::uint64_t seed = 0;
};

/// A (header, message) pair that respects the broadcast rule.
inline RandomFrame random_frame(Rng& rng)
{
    const auto type = static_cast<std::uint8_t>(1 + rng.below(kMessageTypeCount));
    RandomFrame f{{}, random_message(rng, type), 0};
    f.header.timestamp_ms = rng.next();
    f.header.cell_id = random_cell_id(rng);
    f.header.direction = rng.below(2) == 0 ? Direction::Downlink : Direction::Uplink;
    if (type == 0x01 || type == 0x02 || type == 0x12) {
        return f;
    }
    f.header.rnti = Rnti{static_cast<std::uint16_t>(rng.below(65536))};
    if (rng.below(2) == 0) {
        f.header.protection = Protected{static_cast<std::uint32_t>(rng.next())};
        f.seed = rng.next();
    }
    return f;
}

// ---------------------------------------------------------------------------
// Scenario builders

inline json plmn_json(const char* mcc = "001", const char* mnc = "01")
{
    return {{"mcc", mcc}, {"mnc", mnc}};
}

inline json cell_json(std::uint32_t id, std::uint16_t tac, double x, double y = 0.0, std::uint32_t earfcn = 1850)
{
    return {{"cell_id", id},
            {"tac", tac},
            {"plmn", plmn_json()},
            {"earfcn", earfcn},
            {"position", {{"x", x}, {"y", y}}},
            {"priority_earfcns", json::array({{{"earfcn", earfcn}, {"priority", 3}}})}};
}

inline std::string imsi_for(int i)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "00101%010d", i);
    return buf;
}

inline std::string msisdn_for(int i)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "1555%07d", i);
    return buf;
}

inline json ue_json(int i, double x, double y = 0.0)
{
    char key[33];
    std::snprintf(key, sizeof key, "%032x", i * 7919 + 1);
    char imei[16];
    std::snprintf(imei, sizeof imei, "35693803%07d", i);
    return {{"imsi", imsi_for(i)}, {"key", key}, {"msisdn", msisdn_for(i)}, {"imei", imei},
            {"position", {{"x", x}, {"y", y}}}};
}

inline json scenario_json(std::uint64_t seed, std::uint64_t duration_ms)
{
    return {{"seed", seed}, {"duration_ms", duration_ms}, {"cells", json::array()}, {"ues", json::array()},
            {"sniffer", {{"enabled", true}, {"position", {{"x", 0}, {"y", 0}}}}}};
}

/// Message names of every frame in a run, as seen by an observer.
struct Recorded
{
    std::uint64_t t = 0;
    FrameHeader header;
    Message message;
    FrameOrigin origin;
    std::optional<std::size_t> ue;
    bool delivered = false;
};

inline FrameObserver recorder(std::vector<Recorded>& out)
{
    return [&out](const FrameEvent& e) {
        out.push_back({e.t_ms, e.header, *e.message, e.origin, e.ue, e.delivered});
    };
}

} // namespace ltesim::testing
