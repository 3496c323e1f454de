#pragma once

// Opaque stand-ins for AKA and key derivation. HMAC-SHA256 keyed with the
// subscriber secret; only ladder position and keyed-ness matter here.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace ltesim {

using SubscriberKey = std::array<std::uint8_t, 16>;
using Challenge = std::array<std::uint8_t, 16>;

/// Authentication response: first 8 bytes of HMAC(key, "res" || rand).
std::uint64_t stub_mac(const SubscriberKey& key, const Challenge& rand);

/// Network authentication token the UE checks: HMAC(key, "autn" || rand)[0..16).
Challenge stub_autn(const SubscriberKey& key, const Challenge& rand);

/// Keystream seed for a security context: HMAC(key, "seed" || rand || key_id)[0..8).
std::uint64_t derive_session_seed(const SubscriberKey& key, const Challenge& rand, std::uint32_t key_id);

SubscriberKey parse_key_hex(std::string_view hex);
std::string to_hex(std::span<const std::uint8_t> bytes);

/// Lower-case hex SHA-256 of the input.
std::string sha256_hex(std::string_view data);

} // namespace ltesim
