#include "ltesim/identity.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

namespace ltesim {

namespace {

void require_digits(std::string_view text, const char* what)
{
    for (char c : text) {
        if (c < '0' || c > '9') {
            throw IdentityError(IdentityErrc::NonDigit, std::string(what) + ": non-digit character");
        }
    }
}

std::uint64_t parse_hex(std::string_view text, std::uint64_t max, const char* what)
{
    if (text.starts_with("0x") || text.starts_with("0X")) {
        text.remove_prefix(2);
    }
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v, 16);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
        throw IdentityError(IdentityErrc::NonDigit, std::string(what) + ": bad hex value");
    }
    if (v > max) {
        throw IdentityError(IdentityErrc::OutOfRange, std::string(what) + ": value out of range");
    }
    return v;
}

} // namespace

Plmn Plmn::parse(std::string_view mcc, std::string_view mnc)
{
    require_digits(mcc, "mcc");
    require_digits(mnc, "mnc");
    if (mcc.size() != 3 || mnc.size() < 2 || mnc.size() > 3) {
        throw IdentityError(IdentityErrc::WrongLength, "plmn: mcc must be 3 digits and mnc 2-3 digits");
    }
    return Plmn{std::string(mcc), std::string(mnc)};
}

Imsi Imsi::parse(std::string_view text, int mnc_length)
{
    if (text.size() != 15) {
        throw IdentityError(IdentityErrc::WrongLength, "imsi: expected 15 digits, got " + std::to_string(text.size()));
    }
    require_digits(text, "imsi");
    if (mnc_length != 2 && mnc_length != 3) {
        throw IdentityError(IdentityErrc::WrongLength, "imsi: mnc length must be 2 or 3");
    }
    return Imsi(std::string(text), mnc_length);
}

Imei Imei::parse(std::string_view text)
{
    if (text.size() != 15) {
        throw IdentityError(IdentityErrc::WrongLength, "imei: expected 15 digits");
    }
    require_digits(text, "imei");
    return Imei(std::string(text));
}

Msisdn Msisdn::parse(std::string_view text)
{
    if (text.size() < 10 || text.size() > 15) {
        throw IdentityError(IdentityErrc::WrongLength, "msisdn: expected 10-15 digits");
    }
    require_digits(text, "msisdn");
    return Msisdn(std::string(text));
}

std::string to_hex(Tmsi tmsi)
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", tmsi.value);
    return buf;
}

std::string to_hex(Rnti rnti)
{
    char buf[8];
    std::snprintf(buf, sizeof buf, "0x%04x", rnti.value);
    return buf;
}

Tmsi parse_tmsi_hex(std::string_view text)
{
    return Tmsi{static_cast<std::uint32_t>(parse_hex(text, UINT32_MAX, "tmsi"))};
}

Rnti parse_rnti_hex(std::string_view text)
{
    return Rnti{static_cast<std::uint16_t>(parse_hex(text, UINT16_MAX, "rnti"))};
}

Rnti allocate_rnti(std::set<std::uint16_t>& in_use, Rng& rng)
{
    std::size_t taken = std::count_if(in_use.begin(), in_use.end(), [](std::uint16_t v) {
        return Rnti{v}.is_device();
    });
    if (taken >= Rnti::kDeviceRangeSize) {
        throw IdentityError(IdentityErrc::CellFull, "rnti: every device value in the cell is in use");
    }
    for (;;) {
        auto v = static_cast<std::uint16_t>(rng.between(Rnti::kMinDevice, Rnti::kMaxDevice));
        if (in_use.insert(v).second) {
            return Rnti{v};
        }
    }
}

Rnti RntiAllocator::allocate()
{
    while (!preset_.empty()) {
        Rnti next = preset_.front();
        preset_.pop_front();
        if (claim(next)) {
            return next;
        }
    }
    return allocate_rnti(in_use_, rng_);
}

Rnti RntiAllocator::allocate_excluding(Rnti excluded)
{
    bool hold = excluded.is_device() && in_use_.insert(excluded.value).second;
    Rnti r;
    try {
        r = allocate();
    } catch (...) {
        if (hold) {
            in_use_.erase(excluded.value);
        }
        throw;
    }
    if (hold) {
        in_use_.erase(excluded.value);
    }
    return r;
}

bool RntiAllocator::claim(Rnti rnti)
{
    return rnti.is_device() && in_use_.insert(rnti.value).second;
}

void RntiAllocator::release(Rnti rnti)
{
    in_use_.erase(rnti.value);
}

Tmsi allocate_tmsi(std::unordered_set<std::uint32_t>& in_use, Rng& rng)
{
    if (in_use.size() > UINT32_MAX) {
        throw IdentityError(IdentityErrc::SpaceExhausted, "tmsi: space exhausted");
    }
    for (;;) {
        auto v = static_cast<std::uint32_t>(rng.next() >> 32);
        if (in_use.insert(v).second) {
            return Tmsi{v};
        }
    }
}

Tmsi TmsiAllocator::allocate()
{
    return allocate_tmsi(in_use_, rng_);
}

bool TmsiAllocator::claim(Tmsi tmsi)
{
    return in_use_.insert(tmsi.value).second;
}

} // namespace ltesim
