#include <catch2/catch_amalgamated.hpp>

#include <bit>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sustain5g/keychain.hpp"
#include "sustain5g/rng.hpp"

using namespace sustain5g;

namespace {

std::array<std::uint8_t, 32> counting_seed() {
  std::array<std::uint8_t, 32> s{};
  for (std::size_t i = 0; i < s.size(); ++i)
    s[i] = static_cast<std::uint8_t>(i);
  return s;
}

std::array<std::uint8_t, 32> random_bytes(SplitMix64& rng) {
  std::array<std::uint8_t, 32> out{};
  for (std::size_t i = 0; i < out.size(); i += 8) {
    const std::uint64_t w = rng.next();
    for (std::size_t j = 0; j < 8; ++j)
      out[i + j] = static_cast<std::uint8_t>(w >> (8 * j));
  }
  return out;
}

int hamming(const std::array<std::uint8_t, 32>& a,
            const std::array<std::uint8_t, 32>& b) {
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    d += std::popcount(static_cast<unsigned>(a[i] ^ b[i]));
  return d;
}

}  // namespace

TEST_CASE("derive_key is deterministic and label-sensitive", "[keychain]") {
  KeyMaterial parent;
  parent.bytes = counting_seed();
  parent.label = "K_AMF";

  const auto a = derive_key(parent, "child");
  const auto b = derive_key(parent, "child");
  CHECK(a.bytes == b.bytes);
  CHECK(a.label == "child");
  CHECK(a.generation == 1);

  const auto c = derive_key(parent, "chile");
  CHECK(c.bytes != a.bytes);

  const auto gc = derive_key(a, "grandchild");
  CHECK(gc.generation == 2);
  CHECK(gc.bytes != a.bytes);

  CHECK_THROWS_AS(derive_key(parent, ""), std::invalid_argument);
}

TEST_CASE("derived keys are distinct across random parents", "[keychain]") {
  SplitMix64 rng(0x5eed5eed5eed5eedULL);
  std::set<std::array<std::uint8_t, 32>> seen;
  for (int i = 0; i < 10000; ++i) {
    KeyMaterial parent;
    parent.bytes = random_bytes(rng);
    seen.insert(derive_key(parent, "x").bytes);
  }
  CHECK(seen.size() == 10000);
}

TEST_CASE("single-bit parent flips avalanche the child", "[keychain]") {
  SplitMix64 rng(0xa5a1a4c8eULL);
  double mean = 0.0;
  for (int i = 0; i < 1000; ++i) {
    KeyMaterial parent;
    parent.bytes = random_bytes(rng);
    const auto base = derive_key(parent, "k");
    const std::uint64_t bit = rng.below(256);
    parent.bytes[bit >> 3] ^= static_cast<std::uint8_t>(1u << (bit & 7));
    const int d = hamming(base.bytes, derive_key(parent, "k").bytes);
    CHECK(d >= 64);
    CHECK(d <= 192);
    mean += d;
  }
  mean /= 1000.0;
  CHECK(mean >= 126.0);
  CHECK(mean <= 130.0);
}

TEST_CASE("hierarchy skeleton has the expected paths", "[keychain]") {
  auto h = build_hierarchy(counting_seed());
  CHECK(h.key_count() == 4);

  const auto* amf = h.find("K_AMF");
  REQUIRE(amf != nullptr);
  CHECK(amf->bytes == counting_seed());
  CHECK(amf->generation == 0);

  const auto* otk = h.find("K_AMF/K_OTK");
  REQUIRE(otk != nullptr);
  CHECK(otk->generation == 1);
  CHECK(otk->label == "K_OTK");

  REQUIRE(h.find("K_AMF/K_OTK/TM-F") != nullptr);
  REQUIRE(h.find("K_AMF/K_OTK/HM-F") != nullptr);
  CHECK(h.find("K_AMF/K_OTK/TM-F")->generation == 2);
  CHECK(h.find("K_AMF/K_OTK/TM-F")->bytes !=
        h.find("K_AMF/K_OTK/HM-F")->bytes);

  CHECK(h.find("K_OTK") == nullptr);
  CHECK(h.find("K_AMF/K_OTK/nope") == nullptr);
  CHECK(h.find("") == nullptr);
}

TEST_CASE("session key issuance tracks per-peer counters", "[keychain]") {
  auto h = build_hierarchy(counting_seed());

  const auto k1 = h.issue_session_key(SessionMode::ShortRange, "veh-7");
  CHECK(k1.label == "veh-7#1");
  const auto* found = h.find("K_AMF/K_OTK/TM-F/veh-7#1");
  REQUIRE(found != nullptr);
  CHECK(found->bytes == k1.bytes);
  CHECK(k1.generation == 3);

  const auto k2 = h.issue_session_key(SessionMode::ShortRange, "veh-7");
  CHECK(k2.label == "veh-7#2");
  CHECK(k2.bytes != k1.bytes);

  // Counters are per branch: the same peer starts at #1 on the backhaul.
  const auto k3 = h.issue_session_key(SessionMode::LongRange, "veh-7");
  CHECK(k3.label == "veh-7#1");
  REQUIRE(h.find("K_AMF/K_OTK/HM-F/veh-7#1") != nullptr);
  CHECK(h.find("K_AMF/K_OTK/HM-F/veh-7#1")->bytes != k1.bytes);

  const auto hub = h.issue_session_key(SessionMode::LongRange, "hub-1");
  CHECK(hub.label == "hub-1#1");
  REQUIRE(h.find("K_AMF/K_OTK/HM-F/hub-1#1") != nullptr);

  CHECK(h.key_count() == 8);
  CHECK_THROWS_AS(h.issue_session_key(SessionMode::ShortRange, ""),
                  std::invalid_argument);
}

TEST_CASE("issuance bumps the tracked vehicle's key total", "[keychain]") {
  auto h = build_hierarchy(counting_seed());
  VehicleContext ctx;
  ctx.total_keys = 5;
  h.track_vehicle("veh-9", ctx);

  h.issue_session_key(SessionMode::ShortRange, "veh-9");
  REQUIRE(h.vehicle("veh-9") != nullptr);
  CHECK(h.vehicle("veh-9")->total_keys == 6);

  // Issuing for an untracked peer is fine and tracks nothing.
  h.issue_session_key(SessionMode::ShortRange, "ghost");
  CHECK(h.vehicle("ghost") == nullptr);
}

TEST_CASE("hierarchy dump matches the golden export", "[keychain]") {
  auto h = build_hierarchy(counting_seed());
  h.issue_session_key(SessionMode::ShortRange, "veh-7");
  h.issue_session_key(SessionMode::ShortRange, "veh-7");
  h.issue_session_key(SessionMode::LongRange, "hub-1");

  const std::string got = h.dump();

  // Structure: sorted paths, one "path hex" pair per line.
  std::istringstream is(got);
  std::string line;
  std::string prev;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    const auto sp = line.find(' ');
    REQUIRE(sp != std::string::npos);
    CHECK(line.size() == sp + 1 + 64);
    CHECK(line.substr(0, 5) == "K_AMF");
    CHECK(prev < line);
    prev = line;
  }
  CHECK(n == 7);

  std::ifstream golden(std::string(SUSTAIN5G_GOLDEN_DIR) +
                       "/hierarchy_dump.txt");
  REQUIRE(golden.is_open());
  std::stringstream want;
  want << golden.rdbuf();
  CHECK(got == want.str());
}

TEST_CASE("session machine walks Q passes to Active", "[keychain]") {
  SessionState s;
  s.passes_required = 3;

  s = advance_session(s, SessionEvent::Start);
  CHECK(s.phase == SessionPhase::Authenticating);
  CHECK(s.pass_index == 1);

  s = advance_session(s, SessionEvent::PassCompleted);
  CHECK(s.phase == SessionPhase::Authenticating);
  CHECK(s.pass_index == 2);
  s = advance_session(s, SessionEvent::PassCompleted);
  s = advance_session(s, SessionEvent::PassCompleted);
  CHECK(s.phase == SessionPhase::Active);
  CHECK(s.pass_index == 0);
  CHECK(s.messages_sent == 3);

  s = advance_session(s, SessionEvent::RefreshRequested);
  CHECK(s.phase == SessionPhase::Refreshing);
  CHECK(s.pass_index == 1);
  for (int i = 0; i < 3; ++i)
    s = advance_session(s, SessionEvent::PassCompleted);
  CHECK(s.phase == SessionPhase::Active);
  CHECK(s.messages_sent == 6);

  s = advance_session(s, SessionEvent::Expire);
  CHECK(s.phase == SessionPhase::Expired);
  CHECK(s.pass_index == 0);
}

TEST_CASE("expire is legal from every phase", "[keychain]") {
  for (auto phase :
       {SessionPhase::Idle, SessionPhase::Authenticating, SessionPhase::Active,
        SessionPhase::Refreshing, SessionPhase::Expired}) {
    SessionState s;
    s.phase = phase;
    s.pass_index = phase == SessionPhase::Authenticating ? 1 : 0;
    const auto after = advance_session(s, SessionEvent::Expire);
    CHECK(after.phase == SessionPhase::Expired);
    CHECK(after.pass_index == 0);
  }
}

TEST_CASE("illegal transitions throw with named phase and event",
          "[keychain]") {
  auto expect_illegal = [](SessionPhase p, SessionEvent e,
                           const std::string& needle) {
    SessionState s;
    s.phase = p;
    if (p == SessionPhase::Authenticating || p == SessionPhase::Refreshing)
      s.pass_index = 1;
    CHECK_THROWS_WITH(advance_session(s, e),
                      Catch::Matchers::ContainsSubstring(needle));
  };
  expect_illegal(SessionPhase::Idle, SessionEvent::PassCompleted,
                 "Idle + PassCompleted");
  expect_illegal(SessionPhase::Idle, SessionEvent::RefreshRequested,
                 "Idle + RefreshRequested");
  expect_illegal(SessionPhase::Active, SessionEvent::Start,
                 "Active + Start");
  expect_illegal(SessionPhase::Active, SessionEvent::PassCompleted,
                 "Active + PassCompleted");
  expect_illegal(SessionPhase::Authenticating, SessionEvent::Start,
                 "Authenticating + Start");
  expect_illegal(SessionPhase::Authenticating, SessionEvent::RefreshRequested,
                 "Authenticating + RefreshRequested");
  expect_illegal(SessionPhase::Refreshing, SessionEvent::Start,
                 "Refreshing + Start");
  expect_illegal(SessionPhase::Expired, SessionEvent::Start,
                 "Expired + Start");

  SessionState zero;
  zero.passes_required = 0;
  CHECK_THROWS_AS(advance_session(zero, SessionEvent::Expire),
                  std::logic_error);
}

TEST_CASE("state machine safety over all short event sequences",
          "[keychain]") {
  // Exhaustively enumerate every event sequence up to length 2Q+2 and check
  // the structural invariants on each reachable state.
  const std::array<SessionEvent, 4> events = {
      SessionEvent::Start, SessionEvent::PassCompleted, SessionEvent::Expire,
      SessionEvent::RefreshRequested};

  for (std::uint32_t q = 1; q <= 4; ++q) {
    SessionState init;
    init.passes_required = q;
    std::vector<SessionState> frontier{init};
    for (std::uint32_t depth = 0; depth < 2 * q + 2; ++depth) {
      std::vector<SessionState> next;
      for (const auto& s : frontier) {
        for (const auto e : events) {
          SessionState t;
          bool legal = true;
          try {
            t = advance_session(s, e);
          } catch (const std::logic_error&) {
            legal = false;
          }
          if (!legal) continue;

          CHECK(t.pass_index <= t.passes_required);
          const bool in_flight = t.phase == SessionPhase::Authenticating ||
                                 t.phase == SessionPhase::Refreshing;
          CHECK((t.pass_index >= 1) == in_flight);
          if (t.phase == SessionPhase::Active)
            CHECK(t.messages_sent >= t.passes_required);
          if (e == SessionEvent::PassCompleted)
            CHECK(t.messages_sent == s.messages_sent + 1);
          else
            CHECK(t.messages_sent == s.messages_sent);
          next.push_back(t);
        }
      }
      frontier = std::move(next);
    }
  }
}

TEST_CASE("refresh policy rejects bad arguments", "[keychain]") {
  VehicleContext ctx;
  std::array<double, 8> w{};
  CHECK_THROWS_AS(evaluate_refresh_policy(ctx, 0.0, w, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(evaluate_refresh_policy(ctx, -5.0, w, 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      evaluate_refresh_policy(ctx, 10.0, w,
                              std::numeric_limits<double>::quiet_NaN()),
      std::invalid_argument);
  w[3] = -0.1;
  CHECK_THROWS_AS(evaluate_refresh_policy(ctx, 10.0, w, 1.0),
                  std::invalid_argument);
  w[3] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(evaluate_refresh_policy(ctx, 10.0, w, 1.0),
                  std::invalid_argument);
}

TEST_CASE("quiescent vehicle keeps its key", "[keychain]") {
  VehicleContext ctx;  // all zero, fully associated
  std::array<double, 8> w;
  w.fill(1.0);
  const auto d = evaluate_refresh_policy(ctx, 100.0, w, 0.5);
  CHECK(d.action == RefreshAction::Keep);
  CHECK(d.score == 0.0);
  CHECK(d.reasons.empty());
}

TEST_CASE("saturated factors score the full weight mass", "[keychain]") {
  VehicleContext ctx;
  ctx.speed = 50.0;
  ctx.location = {600.0, 800.0};  // displacement exactly 1000
  ctx.last_update = 100.0;        // == fs_window: factor 1, no hard rule
  ctx.shared_sessions = 16;
  ctx.refresh_rate = 10.0;
  ctx.total_keys = 64;
  ctx.zone_traversals = 8;
  ctx.associativity = 0.0;

  PolicyBaseline base;
  base.zone_traversals = 8;  // matches: handover rule stays quiet

  std::array<double, 8> w;
  w.fill(0.5);

  const auto hot = evaluate_refresh_policy(ctx, 100.0, w, 3.9, base);
  CHECK(hot.score == 4.0);
  CHECK(hot.action == RefreshAction::Regenerate);
  REQUIRE(hot.reasons.size() == 1);
  CHECK(hot.reasons[0] == "score threshold");

  // Strictly-greater comparison: score == threshold keeps the key.
  const auto edge = evaluate_refresh_policy(ctx, 100.0, w, 4.0, base);
  CHECK(edge.action == RefreshAction::Keep);
  CHECK(edge.reasons.empty());
}

TEST_CASE("factors clamp to [0,1]", "[keychain]") {
  VehicleContext ctx;
  ctx.speed = 5000.0;
  std::array<double, 8> w{};
  w[0] = 1.0;
  CHECK(evaluate_refresh_policy(ctx, 100.0, w, 10.0).score == 1.0);

  ctx.speed = -10.0;
  CHECK(evaluate_refresh_policy(ctx, 100.0, w, 10.0).score == 0.0);

  VehicleContext over;
  over.associativity = 2.0;  // 1 - V_A clamps up to 0
  std::array<double, 8> wa{};
  wa[7] = 1.0;
  CHECK(evaluate_refresh_policy(over, 100.0, wa, 10.0).score == 0.0);
}

TEST_CASE("score is monotone in each raw factor", "[keychain]") {
  std::array<double, 8> w;
  w.fill(1.0);
  VehicleContext lo;
  lo.speed = 10.0;
  VehicleContext hi = lo;
  hi.speed = 20.0;
  CHECK(evaluate_refresh_policy(hi, 100.0, w, 99.0).score >
        evaluate_refresh_policy(lo, 100.0, w, 99.0).score);

  VehicleContext more = lo;
  more.shared_sessions = 8;
  CHECK(evaluate_refresh_policy(more, 100.0, w, 99.0).score >
        evaluate_refresh_policy(lo, 100.0, w, 99.0).score);

  VehicleContext loose = lo;
  loose.associativity = 0.25;
  CHECK(evaluate_refresh_policy(loose, 100.0, w, 99.0).score >
        evaluate_refresh_policy(lo, 100.0, w, 99.0).score);
}

TEST_CASE("hard rules fire regardless of threshold", "[keychain]") {
  std::array<double, 8> w{};
  const double big_threshold = 1e9;

  VehicleContext stale;
  stale.last_update = 100.0001;
  const auto d1 = evaluate_refresh_policy(stale, 100.0, w, big_threshold);
  CHECK(d1.action == RefreshAction::Regenerate);
  REQUIRE(d1.reasons.size() == 1);
  CHECK(d1.reasons[0] == "fail-safe expiry");

  VehicleContext hopped;
  hopped.zone_traversals = 1;
  const auto d2 = evaluate_refresh_policy(hopped, 100.0, w, big_threshold);
  CHECK(d2.action == RefreshAction::Regenerate);
  REQUIRE(d2.reasons.size() == 1);
  CHECK(d2.reasons[0] == "zone handover");

  VehicleContext both = stale;
  both.zone_traversals = 3;
  const auto d3 = evaluate_refresh_policy(both, 100.0, w, big_threshold);
  REQUIRE(d3.reasons.size() == 2);
  CHECK(d3.reasons[0] == "fail-safe expiry");
  CHECK(d3.reasons[1] == "zone handover");

  // A hard rule preempts the score reason even when the score clears it.
  std::array<double, 8> heavy;
  heavy.fill(10.0);
  const auto d4 = evaluate_refresh_policy(both, 100.0, heavy, 0.0);
  CHECK(d4.action == RefreshAction::Regenerate);
  for (const auto& r : d4.reasons) CHECK(r != "score threshold");
}

TEST_CASE("every regenerate decision carries a reason", "[keychain]") {
  SplitMix64 rng(77);
  std::array<double, 8> w;
  w.fill(1.0);
  for (int i = 0; i < 500; ++i) {
    VehicleContext ctx;
    ctx.speed = rng.uniform01() * 80.0;
    ctx.location = {rng.uniform01() * 2000.0, rng.uniform01() * 2000.0};
    ctx.last_update = rng.uniform01() * 150.0;
    ctx.shared_sessions = rng.below(40);
    ctx.refresh_rate = rng.uniform01() * 20.0;
    ctx.total_keys = rng.below(100);
    ctx.zone_traversals = rng.below(4);
    ctx.associativity = rng.uniform01();
    const auto d = evaluate_refresh_policy(ctx, 100.0, w, 3.0);
    if (d.action == RefreshAction::Regenerate)
      CHECK_FALSE(d.reasons.empty());
    else
      CHECK(d.reasons.empty());
    CHECK(d.score >= 0.0);
    CHECK(d.score <= 8.0);
  }
}
