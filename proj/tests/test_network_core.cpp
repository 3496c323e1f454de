#include "ltesim/network_core.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

using namespace ltesim;

namespace {

const Plmn kHome{"001", "01"};

CellConfig make_cell(std::uint32_t id, std::uint16_t tac = 7, std::deque<Rnti> forced = {})
{
    CellConfig c;
    c.radio.identity = {id, tac, kHome, 1850};
    c.priority_earfcns = {{1850, 3}};
    c.forced_rntis = std::move(forced);
    return c;
}

HssRecord subscriber(int i)
{
    char key[33];
    std::snprintf(key, sizeof key, "%032x", i + 1);
    return {Imsi::parse(ltesim::testing::imsi_for(i), 2), parse_key_hex(key),
            Msisdn::parse(ltesim::testing::msisdn_for(i))};
}

template <class T>
const T* only(const std::vector<OutFrame>& out)
{
    if (out.size() != 1) {
        ADD_FAILURE() << "expected one frame, got " << out.size();
        return nullptr;
    }
    const T* m = std::get_if<T>(&out.front().message);
    if (m == nullptr) {
        ADD_FAILURE() << "unexpected " << message_name(out.front().message);
    }
    return m;
}

/// Plays the UE side of the ladder against a core.
struct Harness
{
    NetworkCore core;
    HssRecord ue;
    std::uint64_t now = 1;

    explicit Harness(std::vector<CellConfig> cells, int subscriber_index = 1)
        : core(std::move(cells), {subscriber(subscriber_index)}, 17), ue(subscriber(subscriber_index))
    {
    }

    std::vector<OutFrame> ul(std::uint32_t cell, Rnti rnti, Message m, std::optional<std::uint32_t> key = std::nullopt)
    {
        FrameHeader h;
        h.timestamp_ms = now;
        h.cell_id = cell;
        h.rnti = rnti;
        h.direction = Direction::Uplink;
        if (key) {
            h.protection = Protected{*key};
        }
        std::vector<OutFrame> out;
        core.handle_uplink(DecodedFrame{h, std::move(m)}, now, out);
        core.check_invariants();
        return out;
    }

    Rnti rach(std::uint32_t cell)
    {
        auto out = ul(cell, Rnti{}, msg::RachPreamble{1});
        const auto* rar = only<msg::MacRar>(out);
        EXPECT_NE(rar, nullptr);
        EXPECT_EQ(out[0].rnti, rar->temp_rnti);
        return rar ? rar->temp_rnti : Rnti{};
    }

    struct Attached
    {
        Rnti rnti;
        std::uint32_t key_id = 0;
        Tmsi tmsi;
    };

    Attached attach(std::uint32_t cell)
    {
        Attached a;
        a.rnti = rach(cell);
        auto out = ul(cell, a.rnti, msg::RrcConnectionRequest{RandomIdentity{5}});
        EXPECT_NE(only<msg::RrcConnectionSetup>(out), nullptr);
        out = ul(cell, a.rnti, msg::AttachRequest{ue.imsi});
        const auto* auth = only<msg::AuthenticationRequest>(out);
        if (auth == nullptr) {
            return a;
        }
        EXPECT_EQ(auth->autn, stub_autn(ue.key, auth->rand));
        const auto rand = auth->rand;
        out = ul(cell, a.rnti, msg::AuthenticationResponse{stub_mac(ue.key, rand)});
        const auto* smc = only<msg::SecurityModeCommand>(out);
        if (smc == nullptr) {
            return a;
        }
        a.key_id = smc->key_id;
        EXPECT_EQ(core.key_table().at(a.key_id), derive_session_seed(ue.key, rand, a.key_id));
        out = ul(cell, a.rnti, msg::SecurityModeComplete{});
        const auto* acc = only<msg::AttachAccept>(out);
        if (acc == nullptr) {
            return a;
        }
        EXPECT_EQ(out[0].protection, Protection{Protected{a.key_id}});
        a.tmsi = acc->tmsi;
        return a;
    }
};

} // namespace

TEST(BroadcastTick, SchedulesMibThenSib1)
{
    auto cfg = make_cell(50);
    cfg.broadcast_period_ms = 40;
    auto out = broadcast_tick(cfg, 80);
    ASSERT_EQ(out.size(), 2U);
    EXPECT_TRUE(std::holds_alternative<msg::Mib>(out[0].message));
    const auto& sib = std::get<msg::Sib1>(out[1].message);
    EXPECT_EQ(sib.plmn, kHome);
    EXPECT_EQ(sib.tac, 7);
    EXPECT_EQ(sib.cell_id, 50U);
    EXPECT_EQ(sib.priority_earfcns, cfg.priority_earfcns);
    for (const auto& f : out) {
        EXPECT_EQ(f.rnti, Rnti{});
        EXPECT_FALSE(is_protected(f.protection));
    }
    EXPECT_TRUE(broadcast_tick(cfg, 79).empty());
    EXPECT_EQ(broadcast_tick(cfg, 0).size(), 2U);
}

TEST(HandoverCandidate, HysteresisThreshold)
{
    msg::MeasurementReport r{{{60, -95}, {50, -90}}};
    auto c = handover_candidate(60, r, 3.0, {50});
    ASSERT_TRUE(c.has_value());
    EXPECT_EQ(c->cell_id, 50U);

    msg::MeasurementReport near{{{60, -95}, {50, -93}}};
    EXPECT_FALSE(handover_candidate(60, near, 3.0, {50}).has_value());

    msg::MeasurementReport edge{{{60, -95}, {50, -92}}};
    EXPECT_TRUE(handover_candidate(60, edge, 3.0, {50}).has_value());

    // Cells outside the operator's network are never targets.
    EXPECT_FALSE(handover_candidate(60, r, 3.0, {70}).has_value());
    // Without the serving cell in the report nothing is decided.
    msg::MeasurementReport no_serving{{{50, -40}}};
    EXPECT_FALSE(handover_candidate(60, no_serving, 3.0, {50}).has_value());
}

TEST(CoreLadder, FreshAttachYieldsProtectedAccept)
{
    Harness h({make_cell(60)});
    auto a = h.attach(60);
    ASSERT_NE(a.key_id, 0U);
    const auto* sub = h.core.subscriber(h.ue.imsi);
    ASSERT_NE(sub, nullptr);
    EXPECT_EQ(sub->tmsi, a.tmsi);
    EXPECT_EQ(sub->tac, 7);
    const auto* s = h.core.find_session(60, a.rnti);
    ASSERT_NE(s, nullptr);
    EXPECT_EQ(s->state, SessionState::Registered);
    EXPECT_TRUE(s->secured);
}

TEST(CoreLadder, WrongResRejectsAndDropsSession)
{
    Harness h({make_cell(60)});
    auto r = h.rach(60);
    h.ul(60, r, msg::RrcConnectionRequest{RandomIdentity{5}});
    auto out = h.ul(60, r, msg::AttachRequest{h.ue.imsi});
    const auto* auth = only<msg::AuthenticationRequest>(out);
    ASSERT_NE(auth, nullptr);
    out = h.ul(60, r, msg::AuthenticationResponse{stub_mac(h.ue.key, auth->rand) ^ 1});
    const auto* rej = only<msg::AttachReject>(out);
    ASSERT_NE(rej, nullptr);
    EXPECT_EQ(rej->emm_cause, EmmCause::PlmnNotAllowed);
    EXPECT_EQ(h.core.find_session(60, r), nullptr);
    EXPECT_TRUE(h.core.key_table().empty());
}

// Keyed-stub soundness over many draws: only the HSS key's answer passes.
TEST(CoreLadder, OnlyTheSubscriberKeyAuthenticates)
{
    Rng rng(8);
    for (int i = 0; i < 200; ++i) {
        Harness h({make_cell(60)});
        auto r = h.rach(60);
        h.ul(60, r, msg::RrcConnectionRequest{RandomIdentity{5}});
        auto out = h.ul(60, r, msg::AttachRequest{h.ue.imsi});
        const auto rand = std::get<msg::AuthenticationRequest>(out.at(0).message).rand;
        auto wrong_key = h.ue.key;
        wrong_key[rng.below(16)] ^= static_cast<std::uint8_t>(1 + rng.below(255));
        const bool honest = rng.below(2) == 0;
        out = h.ul(60, r, msg::AuthenticationResponse{stub_mac(honest ? h.ue.key : wrong_key, rand)});
        ASSERT_EQ(out.size(), 1U);
        ASSERT_EQ(std::holds_alternative<msg::SecurityModeCommand>(out[0].message), honest);
    }
}

TEST(CoreLadder, UnknownImsiRejected)
{
    Harness h({make_cell(60)});
    auto r = h.rach(60);
    h.ul(60, r, msg::RrcConnectionRequest{RandomIdentity{5}});
    auto out = h.ul(60, r, msg::AttachRequest{Imsi::parse("999990000000000", 2)});
    const auto* rej = only<msg::AttachReject>(out);
    ASSERT_NE(rej, nullptr);
    EXPECT_EQ(rej->emm_cause, EmmCause::PlmnNotAllowed);
}

TEST(CoreLadder, UnknownTmsiAsksForImsi)
{
    Harness h({make_cell(60)});
    auto r = h.rach(60);
    h.ul(60, r, msg::RrcConnectionRequest{RandomIdentity{5}});
    auto out = h.ul(60, r, msg::AttachRequest{Tmsi{0x77}});
    const auto* idr = only<msg::IdentityRequest>(out);
    ASSERT_NE(idr, nullptr);
    EXPECT_EQ(idr->requested, msg::IdentityType::Imsi);
    out = h.ul(60, r, msg::IdentityResponse{h.ue.imsi});
    EXPECT_NE(only<msg::AuthenticationRequest>(out), nullptr);
}

TEST(CoreLadder, KnownTmsiSkipsIdentityRequest)
{
    Harness h({make_cell(60)});
    h.core.assign_tmsi(h.ue.imsi, Tmsi{0x77});
    auto r = h.rach(60);
    h.ul(60, r, msg::RrcConnectionRequest{RandomIdentity{5}});
    auto out = h.ul(60, r, msg::AttachRequest{Tmsi{0x77}});
    EXPECT_NE(only<msg::AuthenticationRequest>(out), nullptr);
    EXPECT_THROW(h.core.assign_tmsi(Imsi::parse("999990000000000", 2), Tmsi{1}), UnknownSubscriber);
}

TEST(CorePaging, CarriesTmsiInTrackingArea)
{
    Harness h({make_cell(60, 7), make_cell(61, 7), make_cell(62, 9)});
    auto a = h.attach(60);
    auto frames = h.core.page(h.ue.msisdn);
    ASSERT_EQ(frames.size(), 2U);
    EXPECT_EQ(frames[0].cell_id, 60U);
    EXPECT_EQ(frames[1].cell_id, 61U);
    for (const auto& f : frames) {
        const auto& p = std::get<msg::Paging>(f.message);
        EXPECT_EQ(std::get<Tmsi>(p.identity), a.tmsi);
        EXPECT_EQ(f.rnti, Rnti{});
        EXPECT_FALSE(is_protected(f.protection));
    }
}

TEST(CorePaging, NeverAttachedIsUnknown)
{
    Harness h({make_cell(60)});
    EXPECT_THROW((void)h.core.page(h.ue.msisdn), UnknownSubscriber);
    EXPECT_THROW((void)h.core.page(Msisdn::parse("19999999999")), UnknownSubscriber);
}

TEST(CoreIdle, InactivityBoundary)
{
    Harness h({make_cell(60)});
    auto a = h.attach(60);
    const auto registered_at = h.now + 1;
    std::vector<OutFrame> out;
    h.core.tick(registered_at + 4999, out);
    ASSERT_NE(h.core.find_session(60, a.rnti), nullptr);
    EXPECT_EQ(h.core.find_session(60, a.rnti)->state, SessionState::Registered);
    h.core.tick(registered_at + 5000, out);
    EXPECT_EQ(h.core.find_session(60, a.rnti), nullptr);
    const auto* sub = h.core.subscriber(h.ue.imsi);
    ASSERT_TRUE(sub->prior.has_value());
    EXPECT_EQ(sub->prior->second, a.rnti);
    h.core.check_invariants();
}

namespace {

/// Attach, go idle, resume; returns (rnti before idle, rnti after resume).
std::pair<Rnti, Rnti> idle_and_resume(bool refresh, std::deque<Rnti> forced)
{
    auto cell = make_cell(60, 7, std::move(forced));
    cell.rnti_refresh_on_idle = refresh;
    Harness h({cell});
    auto a = h.attach(60);
    std::vector<OutFrame> out;
    h.now += 6000;
    h.core.tick(h.now, out);
    auto r = h.rach(60);
    out = h.ul(60, r, msg::RrcConnectionRequest{a.tmsi});
    EXPECT_FALSE(out.empty());
    EXPECT_TRUE(std::holds_alternative<msg::RrcConnectionSetup>(out.at(0).message));
    Rnti final = r;
    for (const auto& f : out) {
        if (const auto* rc = std::get_if<msg::RrcConnectionReconfiguration>(&f.message)) {
            EXPECT_TRUE(is_protected(f.protection));
            EXPECT_EQ(rc->mobility->target_cell_id, 60U);
            final = rc->mobility->new_rnti;
        }
    }
    // The UE confirms on the new value; the temporary one is then freed.
    h.ul(60, final, msg::RrcConnectionReconfigurationComplete{}, a.key_id);
    EXPECT_NE(h.core.find_session(60, final), nullptr);
    return {a.rnti, final};
}

} // namespace

TEST(CoreIdle, WithoutRefreshThePriorRntiIsReissued)
{
    auto [before, after] = idle_and_resume(false, {Rnti{99}, Rnti{200}});
    EXPECT_EQ(before, Rnti{99});
    EXPECT_EQ(after, Rnti{99});
}

TEST(CoreIdle, WithRefreshTheRntiChanges)
{
    // The second random access is forced onto the old value; the core must still move it.
    auto [before, after] = idle_and_resume(true, {Rnti{99}, Rnti{99}});
    EXPECT_EQ(before, Rnti{99});
    EXPECT_NE(after, Rnti{99});
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        auto [b, a] = idle_and_resume(true, {});
        ASSERT_NE(a, b);
    }
}

namespace {

std::vector<OutFrame> report_at_60(Harness& h, Harness::Attached& a, std::int8_t serving, std::int8_t neighbor)
{
    return h.ul(60, a.rnti, msg::MeasurementReport{{{60, serving}, {50, neighbor}}}, a.key_id);
}

} // namespace

TEST(CoreHandover, TriggerCarriesPreallocatedRnti)
{
    Harness h({make_cell(60, 7, {Rnti{99}}), make_cell(50, 7, {Rnti{10848}, Rnti{112}})});
    auto a = h.attach(60);
    ASSERT_EQ(a.rnti, Rnti{99});
    EXPECT_TRUE(report_at_60(h, a, -95, -93).empty());
    auto out = report_at_60(h, a, -95, -90);
    const auto* rc = only<msg::RrcConnectionReconfiguration>(out);
    ASSERT_NE(rc, nullptr);
    ASSERT_TRUE(rc->mobility.has_value());
    EXPECT_EQ(rc->mobility->target_cell_id, 50U);
    EXPECT_EQ(rc->mobility->new_rnti, Rnti{10848});
    EXPECT_FALSE(is_protected(out[0].protection)) << "the modelled leak";
    EXPECT_EQ(out[0].rnti, Rnti{99});

    // Another UE's random access at the target cannot collide with the reservation.
    auto temp = h.rach(50);
    EXPECT_EQ(temp, Rnti{112});

    // The moving UE's first protected frame at the target completes the handover.
    h.now += 5;
    auto mover = h.rach(50);
    out = h.ul(50, mover, msg::RrcConnectionReconfigurationComplete{}, a.key_id);
    const auto* final = only<msg::RrcConnectionReconfiguration>(out);
    ASSERT_NE(final, nullptr);
    EXPECT_EQ(final->mobility->target_cell_id, 50U);
    EXPECT_EQ(final->mobility->new_rnti, Rnti{10848});
    EXPECT_EQ(h.core.find_session(60, Rnti{99}), nullptr);
    h.ul(50, Rnti{10848}, msg::RrcConnectionReconfigurationComplete{}, a.key_id);
    EXPECT_EQ(h.core.find_session(50, Rnti{10848})->state, SessionState::Registered);
    EXPECT_EQ(h.core.find_session(50, mover), nullptr);
}

TEST(CoreHandover, EncryptedTriggerWhenConfigured)
{
    auto src = make_cell(60);
    src.encrypt_handover_trigger = true;
    Harness h({src, make_cell(50)});
    auto a = h.attach(60);
    auto out = report_at_60(h, a, -95, -80);
    ASSERT_EQ(out.size(), 1U);
    EXPECT_EQ(out[0].protection, Protection{Protected{a.key_id}});
}

TEST(CoreHandover, ReservationExpires)
{
    Harness h({make_cell(60), make_cell(50, 7, {Rnti{10848}})});
    auto a = h.attach(60);
    report_at_60(h, a, -95, -80);
    std::vector<OutFrame> out;
    h.core.tick(h.now + 1999, out);
    h.core.check_invariants();
    EXPECT_TRUE(h.core.find_session(60, a.rnti)->pending_handover.has_value());
    h.core.tick(h.now + 2000, out);
    EXPECT_FALSE(h.core.find_session(60, a.rnti)->pending_handover.has_value());
    h.core.check_invariants();
}

TEST(CoreDownlink, BuffersAndPagesWhenIdle)
{
    Harness h({make_cell(60)});
    auto a = h.attach(60);
    std::vector<OutFrame> out;
    h.core.deliver_downlink(h.ue.msisdn, 50, h.now, out);
    const auto* data = only<msg::UserData>(out);
    ASSERT_NE(data, nullptr);
    EXPECT_TRUE(is_protected(out[0].protection));

    out.clear();
    h.now += 6000;
    h.core.tick(h.now, out);
    out.clear();
    h.core.deliver_downlink(h.ue.msisdn, 70, h.now, out);
    const auto* page = only<msg::Paging>(out);
    ASSERT_NE(page, nullptr);
    EXPECT_EQ(std::get<Tmsi>(page->identity), a.tmsi);
    out.clear();
    h.core.deliver_downlink(h.ue.msisdn, 80, h.now, out);
    EXPECT_TRUE(out.empty()) << "one page per buffered burst";

    auto r = h.rach(60);
    out = h.ul(60, r, msg::RrcConnectionRequest{a.tmsi});
    std::vector<std::uint16_t> delivered;
    for (const auto& f : out) {
        if (const auto* d = std::get_if<msg::UserData>(&f.message)) {
            delivered.push_back(d->byte_count);
        }
    }
    EXPECT_EQ(delivered, (std::vector<std::uint16_t>{70, 80}));
}

// Random uplink soup against the core: invariants hold and every downlink is
// encodable. Cleartext frames to a secured session other than the handover
// trigger would throw from inside the core.
TEST(CoreProperty, RandomUplinksKeepInvariants)
{
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        Rng rng(seed);
        Harness h({make_cell(60), make_cell(50), make_cell(40, 9)});
        std::vector<std::pair<std::uint32_t, Rnti>> known;
        std::vector<std::uint32_t> keys;
        const std::uint32_t cells[] = {60, 50, 40};
        for (int i = 0; i < 400; ++i) {
            h.now += rng.below(30);
            std::vector<OutFrame> out;
            const auto pick = rng.below(10);
            if (pick == 0 || known.empty()) {
                const auto c = cells[rng.below(3)];
                known.emplace_back(c, h.rach(c));
            } else if (pick == 1) {
                const auto c = cells[rng.below(3)];
                auto a = h.attach(c);
                known.emplace_back(c, a.rnti);
                if (a.key_id != 0) {
                    keys.push_back(a.key_id);
                }
            } else if (pick == 2) {
                h.core.tick(h.now, out);
            } else {
                const auto [c, r] = known[rng.below(known.size())];
                const auto type = static_cast<std::uint8_t>(3 + rng.below(kMessageTypeCount - 3));
                auto m = ltesim::testing::random_message(rng, type);
                if (type == 0x07 && rng.below(2) == 0) {
                    m = msg::AttachRequest{h.ue.imsi};
                }
                std::optional<std::uint32_t> key;
                if (!keys.empty() && rng.below(3) == 0) {
                    key = keys[rng.below(keys.size())];
                }
                if (type == 0x12) {
                    continue;
                }
                out = h.ul(c, r, m, key);
            }
            h.core.check_invariants();
            for (const auto& f : out) {
                FrameHeader hd;
                hd.cell_id = f.cell_id;
                hd.rnti = f.rnti;
                hd.protection = f.protection;
                ASSERT_NO_THROW(validate(hd, f.message)) << message_name(f.message);
            }
        }
    }
}
