#pragma once

// JSON renderings of decoded frames: one object per capture-log line,
//   {"t":..,"cell":..,"rnti":"0x....","dir":"dl"|"ul","prot":"clear"|"protected",
//    ["key_id":"0x........",] "len":<body bytes>, "type":"<message>"|"opaque",
//    ["body":{...},] ["rx":<dBm at the observer>]}

#include "ltesim/codec.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace ltesim {

nlohmann::json message_to_json(const Message& m);
/// Throws CodecError{UnknownType, InvalidField} on malformed input.
Message message_from_json(std::string_view type, const nlohmann::json& body);

struct CaptureRecord
{
    FrameHeader header;
    std::optional<Message> message; // empty for opaque frames
    std::size_t body_length = 0;
    std::optional<double> rx_dbm;
};

CaptureRecord capture_record(std::span<const std::uint8_t> frame, std::optional<double> rx_dbm);
nlohmann::json capture_to_json(const CaptureRecord& rec);
CaptureRecord capture_from_json(const nlohmann::json& line);

/// Re-materialize the bytes an observer without keys saw. Cleartext frames
/// re-encode bit-exactly; opaque bodies come back as key_id + zero bytes of the
/// original length.
std::vector<std::uint8_t> capture_to_frame_bytes(const CaptureRecord& rec);

} // namespace ltesim
