#pragma once

#include "ltesim/rng.hpp"

#include <compare>
#include <cstdint>
#include <deque>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>

namespace ltesim {

enum class IdentityErrc
{
    NonDigit,
    WrongLength,
    CellFull,
    SpaceExhausted,
    OutOfRange,
};

class IdentityError : public std::runtime_error
{
public:
    IdentityError(IdentityErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    IdentityErrc code() const noexcept { return code_; }

private:
    IdentityErrc code_;
};

/// Mobile country/network code pair.
struct Plmn
{
    std::string mcc; // 3 digits
    std::string mnc; // 2 or 3 digits

    static Plmn parse(std::string_view mcc, std::string_view mnc);
    std::string to_string() const { return mcc + mnc; }
    auto operator<=>(const Plmn&) const = default;
};

/// 15-digit subscriber identity with the MCC/MNC/MSIN split made explicit.
class Imsi
{
public:
    /// mnc_length is 2 or 3; the digit string alone cannot tell.
    static Imsi parse(std::string_view text, int mnc_length);

    const std::string& digits() const noexcept { return digits_; }
    int mnc_length() const noexcept { return mnc_length_; }
    std::string mcc() const { return digits_.substr(0, 3); }
    std::string mnc() const { return digits_.substr(3, mnc_length_); }
    std::string msin() const { return digits_.substr(3 + mnc_length_); }
    Plmn plmn() const { return Plmn{mcc(), mnc()}; }

    auto operator<=>(const Imsi&) const = default;

private:
    Imsi(std::string digits, int mnc_length) : digits_(std::move(digits)), mnc_length_(mnc_length) {}

    std::string digits_;
    int mnc_length_ = 3;
};

class Imei
{
public:
    static Imei parse(std::string_view text);
    const std::string& digits() const noexcept { return digits_; }
    auto operator<=>(const Imei&) const = default;

private:
    explicit Imei(std::string digits) : digits_(std::move(digits)) {}
    std::string digits_;
};

class Msisdn
{
public:
    static Msisdn parse(std::string_view text);
    const std::string& digits() const noexcept { return digits_; }
    auto operator<=>(const Msisdn&) const = default;

private:
    explicit Msisdn(std::string digits) : digits_(std::move(digits)) {}
    std::string digits_;
};

struct Tmsi
{
    std::uint32_t value = 0;
    auto operator<=>(const Tmsi&) const = default;
};

/// Cell radio network temporary identifier. 0x0000 is the broadcast sentinel.
struct Rnti
{
    static constexpr std::uint16_t kBroadcast = 0x0000;
    static constexpr std::uint16_t kMinDevice = 0x0001;
    static constexpr std::uint16_t kMaxDevice = 0xFFF3;
    static constexpr std::uint32_t kDeviceRangeSize = kMaxDevice - kMinDevice + 1;

    std::uint16_t value = kBroadcast;

    constexpr bool is_device() const noexcept { return value >= kMinDevice && value <= kMaxDevice; }
    auto operator<=>(const Rnti&) const = default;
};

struct CellIdentity
{
    static constexpr std::uint32_t kMaxCellId = (1u << 28) - 1;

    std::uint32_t cell_id = 0;
    std::uint16_t tac = 0;
    Plmn plmn;
    std::uint32_t earfcn = 0;

    bool operator==(const CellIdentity&) const = default;
};

// Capture-log renderings: decimal digit strings for IMSI/IMEI/MSISDN,
// lower-case 0x-prefixed hex for TMSI/RNTI.
std::string to_hex(Tmsi tmsi);
std::string to_hex(Rnti rnti);
Tmsi parse_tmsi_hex(std::string_view text);
Rnti parse_rnti_hex(std::string_view text);

/// Per-cell C-RNTI allocator. Draws uniformly from the device range, skipping
/// values in use. An optional preset queue is consumed first (fixture replay).
class RntiAllocator
{
public:
    explicit RntiAllocator(std::uint64_t seed = 0) : rng_(seed) {}

    Rnti allocate();
    /// Draw excluding one extra value (which need not be in use).
    Rnti allocate_excluding(Rnti excluded);
    /// Claim a specific value; false if it is already taken or not a device value.
    bool claim(Rnti rnti);
    void release(Rnti rnti);

    bool in_use(Rnti rnti) const { return in_use_.contains(rnti.value); }
    std::size_t active() const noexcept { return in_use_.size(); }
    const std::set<std::uint16_t>& in_use_set() const noexcept { return in_use_; }

    void preset(std::deque<Rnti> values) { preset_ = std::move(values); }

private:
    Rng rng_;
    std::set<std::uint16_t> in_use_;
    std::deque<Rnti> preset_;
};

/// Draws a device RNTI outside `in_use` and inserts it.
/// Throws IdentityError{CellFull} when every device value is taken.
Rnti allocate_rnti(std::set<std::uint16_t>& in_use, Rng& rng);

/// Core-wide TMSI allocator over the full 32-bit space.
class TmsiAllocator
{
public:
    explicit TmsiAllocator(std::uint64_t seed = 0) : rng_(seed) {}

    Tmsi allocate();
    bool claim(Tmsi tmsi);
    void release(Tmsi tmsi) { in_use_.erase(tmsi.value); }
    bool in_use(Tmsi tmsi) const { return in_use_.contains(tmsi.value); }

private:
    Rng rng_;
    std::unordered_set<std::uint32_t> in_use_;
};

Tmsi allocate_tmsi(std::unordered_set<std::uint32_t>& in_use, Rng& rng);

} // namespace ltesim
