#include "ltesim/identity.hpp"
#include "ltesim/keyed_stub.hpp"

#include <gtest/gtest.h>

#include <set>
#include <unordered_set>

using namespace ltesim;

namespace {

IdentityErrc imsi_error(const char* text, int mnc_length)
{
    try {
        (void)Imsi::parse(text, mnc_length);
    } catch (const IdentityError& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error for " << text;
    return IdentityErrc::OutOfRange;
}

} // namespace

TEST(Imsi, SplitsByDeclaredWidths)
{
    auto imsi = Imsi::parse("310150123456789", 3);
    EXPECT_EQ(imsi.mcc(), "310");
    EXPECT_EQ(imsi.mnc(), "150");
    EXPECT_EQ(imsi.msin(), "123456789");
    EXPECT_EQ(imsi.digits(), "310150123456789");
    EXPECT_EQ(imsi.plmn(), (Plmn{"310", "150"}));
}

TEST(Imsi, TwoDigitMnc)
{
    auto imsi = Imsi::parse("001011234567890", 2);
    EXPECT_EQ(imsi.mnc(), "01");
    EXPECT_EQ(imsi.msin(), "1234567890");
}

TEST(Imsi, RejectsWrongLength)
{
    EXPECT_EQ(imsi_error("00000000000000", 3), IdentityErrc::WrongLength);
    EXPECT_EQ(imsi_error("0000000000000000", 3), IdentityErrc::WrongLength);
    EXPECT_EQ(imsi_error("", 2), IdentityErrc::WrongLength);
}

TEST(Imsi, RejectsNonDigit)
{
    EXPECT_EQ(imsi_error("31015012345678X", 3), IdentityErrc::NonDigit);
    EXPECT_EQ(imsi_error(" 10150123456789", 3), IdentityErrc::NonDigit);
}

TEST(Imsi, RejectsBadMncLength)
{
    EXPECT_THROW((void)Imsi::parse("310150123456789", 4), IdentityError);
}

TEST(Identifiers, HexRenderingIsLowerCasePrefixed)
{
    EXPECT_EQ(to_hex(Rnti{10848}), "0x2a60");
    EXPECT_EQ(to_hex(Rnti{99}), "0x0063");
    EXPECT_EQ(to_hex(Tmsi{0xDEADBEEF}), "0xdeadbeef");
    EXPECT_EQ(parse_rnti_hex("0x2a60"), Rnti{10848});
    EXPECT_EQ(parse_tmsi_hex("0xdeadbeef"), Tmsi{0xDEADBEEF});
}

TEST(Identifiers, OtherDigitStrings)
{
    EXPECT_EQ(Imei::parse("356938035643809").digits(), "356938035643809");
    EXPECT_THROW((void)Imei::parse("35693803564380"), IdentityError);
    EXPECT_EQ(Msisdn::parse("15551234567").digits(), "15551234567");
    EXPECT_THROW((void)Msisdn::parse("1555x"), IdentityError);
}

TEST(AllocateRnti, ReturnsDeviceValueAndRecordsIt)
{
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::set<std::uint16_t> in_use;
        Rng rng(seed);
        auto r = allocate_rnti(in_use, rng);
        EXPECT_GE(r.value, 0x0001);
        EXPECT_LE(r.value, 0xFFF3);
        EXPECT_TRUE(in_use.contains(r.value));
    }
}

TEST(AllocateRnti, FullCellThrows)
{
    std::set<std::uint16_t> in_use;
    for (std::uint32_t v = Rnti::kMinDevice; v <= Rnti::kMaxDevice; ++v) {
        in_use.insert(static_cast<std::uint16_t>(v));
    }
    Rng rng(1);
    try {
        (void)allocate_rnti(in_use, rng);
        FAIL() << "expected CellFull";
    } catch (const IdentityError& e) {
        EXPECT_EQ(e.code(), IdentityErrc::CellFull);
    }
}

TEST(AllocateRnti, LastFreeValueIsFound)
{
    std::set<std::uint16_t> in_use;
    for (std::uint32_t v = Rnti::kMinDevice; v <= Rnti::kMaxDevice; ++v) {
        if (v != 777) {
            in_use.insert(static_cast<std::uint16_t>(v));
        }
    }
    Rng rng(5);
    EXPECT_EQ(allocate_rnti(in_use, rng).value, 777);
}

TEST(AllocateRnti, NeverReturnsInUseValueOver10kDraws)
{
    Rng rng(2024);
    for (int i = 0; i < 10000; ++i) {
        std::set<std::uint16_t> in_use{10848};
        auto r = allocate_rnti(in_use, rng);
        ASSERT_NE(r.value, 10848);
        ASSERT_TRUE(r.is_device());
    }
}

TEST(AllocateRnti, DeterministicGivenSeedAndSet)
{
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        std::set<std::uint16_t> a{1, 2, 3};
        std::set<std::uint16_t> b{1, 2, 3};
        Rng ra(seed);
        Rng rb(seed);
        for (int i = 0; i < 20; ++i) {
            ASSERT_EQ(allocate_rnti(a, ra), allocate_rnti(b, rb));
        }
    }
}

// Random allocate/release sequences: the allocator's set always matches a
// model set and every handed-out value was free at the time.
TEST(RntiAllocator, RandomSequencesKeepSetConsistent)
{
    Rng driver(77);
    for (int trial = 0; trial < 50; ++trial) {
        RntiAllocator alloc(driver.next());
        std::set<std::uint16_t> model;
        for (int op = 0; op < 500; ++op) {
            if (model.empty() || driver.below(3) != 0) {
                auto r = alloc.allocate();
                ASSERT_TRUE(r.is_device());
                ASSERT_FALSE(model.contains(r.value));
                model.insert(r.value);
            } else {
                auto it = model.begin();
                std::advance(it, static_cast<long>(driver.below(model.size())));
                alloc.release(Rnti{*it});
                model.erase(it);
            }
            ASSERT_EQ(alloc.in_use_set(), model);
        }
    }
}

TEST(RntiAllocator, PresetIsConsumedFirst)
{
    RntiAllocator alloc(3);
    alloc.preset({Rnti{10848}, Rnti{112}});
    EXPECT_EQ(alloc.allocate(), Rnti{10848});
    EXPECT_EQ(alloc.allocate(), Rnti{112});
    EXPECT_TRUE(alloc.in_use(Rnti{10848}));
    EXPECT_EQ(alloc.active(), 2U);
}

TEST(RntiAllocator, ExcludingNeverReturnsExcluded)
{
    RntiAllocator alloc(9);
    for (int i = 0; i < 10000; ++i) {
        auto r = alloc.allocate_excluding(Rnti{42});
        ASSERT_NE(r.value, 42);
        alloc.release(r);
    }
}

TEST(RntiAllocator, ClaimRejectsTakenAndSentinel)
{
    RntiAllocator alloc;
    EXPECT_TRUE(alloc.claim(Rnti{99}));
    EXPECT_FALSE(alloc.claim(Rnti{99}));
    EXPECT_FALSE(alloc.claim(Rnti{0}));
    EXPECT_FALSE(alloc.claim(Rnti{0xFFF4}));
}

TEST(AllocateTmsi, NeverReturnsInUseValue)
{
    Rng rng(11);
    std::unordered_set<std::uint32_t> in_use;
    for (int i = 0; i < 10000; ++i) {
        const auto before = in_use.size();
        auto t = allocate_tmsi(in_use, rng);
        ASSERT_EQ(in_use.size(), before + 1) << "value " << t.value << " was already taken";
    }
}

TEST(AllocateTmsi, SuccessiveAllocationsDiffer)
{
    TmsiAllocator alloc(4);
    auto a = alloc.allocate();
    auto b = alloc.allocate();
    EXPECT_NE(a, b);
    EXPECT_TRUE(alloc.in_use(a));
    EXPECT_TRUE(alloc.in_use(b));
}

TEST(AllocateTmsi, ClaimBlocksLaterDraws)
{
    TmsiAllocator alloc(4);
    EXPECT_TRUE(alloc.claim(Tmsi{5}));
    EXPECT_FALSE(alloc.claim(Tmsi{5}));
    alloc.release(Tmsi{5});
    EXPECT_TRUE(alloc.claim(Tmsi{5}));
}

TEST(Rng, BoundedDrawsStayInRange)
{
    Rng rng(8);
    for (int i = 0; i < 10000; ++i) {
        ASSERT_LT(rng.below(7), 7U);
        auto v = rng.between(86'400'000, 172'800'000);
        ASSERT_GE(v, 86'400'000U);
        ASSERT_LE(v, 172'800'000U);
    }
}

// Oracle values computed independently with Python's hmac/hashlib.
TEST(KeyedStub, MatchesReferenceHmac)
{
    SubscriberKey key{};
    Challenge rand{};
    for (std::uint8_t i = 0; i < 16; ++i) {
        key[i] = i;
        rand[i] = static_cast<std::uint8_t>(16 + i);
    }
    EXPECT_EQ(stub_mac(key, rand), 0x66363bc8ab68a6e6ULL);
    EXPECT_EQ(to_hex(stub_autn(key, rand)), "9e3839c7be2f8654c58cfac6fa2f652d");
    EXPECT_EQ(derive_session_seed(key, rand, 0x01020304), 0xae20265e46e7e889ULL);
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(KeyedStub, DifferentKeysDisagree)
{
    auto a = parse_key_hex("000102030405060708090a0b0c0d0e0f");
    auto b = parse_key_hex("000102030405060708090a0b0c0d0e10");
    Challenge rand{};
    EXPECT_NE(stub_mac(a, rand), stub_mac(b, rand));
    EXPECT_THROW((void)parse_key_hex("0001"), std::exception);
}
