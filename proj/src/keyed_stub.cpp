#include "ltesim/keyed_stub.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/sha.h>

#include <stdexcept>
#include <vector>

namespace ltesim {

namespace {

std::array<std::uint8_t, 32> hmac(const SubscriberKey& key, std::string_view label,
                                  std::span<const std::uint8_t> data)
{
    std::vector<std::uint8_t> msg(label.begin(), label.end());
    msg.insert(msg.end(), data.begin(), data.end());
    std::array<std::uint8_t, 32> out{};
    unsigned int len = 0;
    if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), msg.data(), msg.size(), out.data(), &len) ||
        len != out.size()) {
        throw std::runtime_error("HMAC-SHA256 failed");
    }
    return out;
}

std::uint64_t first_u64(const std::array<std::uint8_t, 32>& d)
{
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v = (v << 8) | d[i];
    }
    return v;
}

int hex_value(char c)
{
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

} // namespace

std::uint64_t stub_mac(const SubscriberKey& key, const Challenge& rand)
{
    return first_u64(hmac(key, "res", rand));
}

Challenge stub_autn(const SubscriberKey& key, const Challenge& rand)
{
    auto d = hmac(key, "autn", rand);
    Challenge out{};
    std::copy_n(d.begin(), out.size(), out.begin());
    return out;
}

std::uint64_t derive_session_seed(const SubscriberKey& key, const Challenge& rand, std::uint32_t key_id)
{
    std::vector<std::uint8_t> data(rand.begin(), rand.end());
    for (int i = 3; i >= 0; --i) {
        data.push_back(static_cast<std::uint8_t>(key_id >> (8 * i)));
    }
    return first_u64(hmac(key, "seed", data));
}

SubscriberKey parse_key_hex(std::string_view hex)
{
    if (hex.starts_with("0x")) {
        hex.remove_prefix(2);
    }
    if (hex.size() != 32) {
        throw std::invalid_argument("subscriber key must be 32 hex digits");
    }
    SubscriberKey key{};
    for (std::size_t i = 0; i < key.size(); ++i) {
        int hi = hex_value(hex[2 * i]);
        int lo = hex_value(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) {
            throw std::invalid_argument("subscriber key has a non-hex digit");
        }
        key[i] = static_cast<std::uint8_t>(hi << 4 | lo);
    }
    return key;
}

std::string to_hex(std::span<const std::uint8_t> bytes)
{
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0F]);
    }
    return out;
}

std::string sha256_hex(std::string_view data)
{
    std::array<std::uint8_t, SHA256_DIGEST_LENGTH> digest{};
    SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(), digest.data());
    return to_hex(digest);
}

} // namespace ltesim
