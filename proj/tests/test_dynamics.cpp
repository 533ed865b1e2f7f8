#include <doctest.h>

#include <sstream>

#include "majority/dynamics.hpp"
#include "majority/graphs.hpp"

using namespace majority;

namespace {

SpinConfiguration random_config(std::uint32_t n, Rng& rng) {
  SpinConfiguration c(n);
  for (auto& s : c) s = (rng() >> 63) ? 1 : -1;
  return c;
}

bool dominates(const SpinConfiguration& a, const SpinConfiguration& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] < b[i]) return false;
  return true;
}

SpinConfiguration negate(SpinConfiguration c) {
  for (auto& s : c) s = static_cast<std::int8_t>(-s);
  return c;
}

}  // namespace

TEST_CASE("all plus is absorbing") {
  const RegularGraph g = sample_random_regular(20, 3, RandomSeed{1, 0});
  const SpinConfiguration plus(20, 1);
  CHECK(majority_step(g, plus, 0, TieBreakTape(RandomSeed{1, 1})) == plus);
}

TEST_CASE("hand-evaluated step on a depth-1 tree") {
  const RegularGraph t = build_tree(3, 1, false);
  const SpinConfiguration c{-1, 1, 1, -1};
  const auto next = majority_step(t, c, 0, TieBreakTape(RandomSeed{0, 0}));
  CHECK(next == SpinConfiguration{1, -1, -1, -1});
}

TEST_CASE("tie at the root of a rooted k=4 tree follows the tape") {
  const RegularGraph t = build_tree(4, 1, true);
  const SpinConfiguration c{1, 1, -1, -1};  // children sum -1, u = +1 gives a tie
  const FieldSequence u{1};
  for (int bit : {1, -1}) {
    const auto keep = TieBreakTape::from_function([bit](std::uint32_t, int) { return bit; }, TieRule::KeepFlip);
    CHECK(rooted_step(t, c, 0, keep, u)[0] == (bit > 0 ? 1 : -1));
    const auto value = TieBreakTape::from_function([bit](std::uint32_t, int) { return bit; }, TieRule::TapeValue);
    CHECK(rooted_step(t, c, 0, value, u)[0] == bit);
  }
}

TEST_CASE("rooted field enters as the missing neighbor") {
  const RegularGraph t = build_tree(3, 1, true);
  const SpinConfiguration c{-1, 1, -1};
  const TieBreakTape tape(RandomSeed{3, 3});
  CHECK(rooted_step(t, c, 0, tape, FieldSequence{1})[0] == 1);
  CHECK(rooted_step(t, c, 0, tape, FieldSequence{-1})[0] == -1);
  CHECK_THROWS_AS(rooted_step(build_tree(3, 1, false), SpinConfiguration(4, 1), 0, tape, FieldSequence{1}), UsageError);
}

TEST_CASE("odd degree never ties at a field-driven root") {
  const RegularGraph t = build_tree(5, 1, true);
  bool tie = false;
  const auto tape = TieBreakTape::from_function([&](std::uint32_t v, int) {
    if (v == 0) tie = true;
    return 1;
  });
  for (std::uint32_t code = 0; code < 16; ++code) {
    SpinConfiguration c(5, -1);
    for (int i = 0; i < 4; ++i) c[i + 1] = ((code >> i) & 1U) ? 1 : -1;
    for (int u : {1, -1}) rooted_step(t, c, 0, tape, FieldSequence{u});
  }
  CHECK_FALSE(tie);
}

TEST_CASE("run classifications") {
  const RegularGraph t = build_tree(3, 2, false);
  const TieBreakTape tape(RandomSeed{5, 0});
  const RunResult minus = run(t, SpinConfiguration(t.n(), -1), 10, tape);
  CHECK(minus.outcome.classification == Classification::ConsensusMinus);
  CHECK(minus.outcome.time == 0);

  SpinConfiguration layers(t.n());
  for (std::uint32_t v = 0; v < t.n(); ++v) layers[v] = t.depth(v) == 1 ? -1 : 1;
  const RunResult cyc = run(t, layers, 10, tape);
  REQUIRE(cyc.trajectory.size() >= 2);
  CHECK(cyc.trajectory[1] == negate(layers));
  CHECK(cyc.outcome.classification == Classification::TwoCycle);
  CHECK(run_to_classification(t, layers, 10, tape).classification == Classification::TwoCycle);
}

TEST_CASE("run_to_classification matches run") {
  Rng rng(RandomSeed{9, 9});
  for (int rep = 0; rep < 20; ++rep) {
    const RegularGraph g = sample_random_regular(200, 3 + rep % 3, RandomSeed{static_cast<std::uint64_t>(rep), 4});
    const SpinConfiguration c = random_config(200, rng);
    const TieBreakTape tape(RandomSeed{static_cast<std::uint64_t>(rep), 5});
    const auto a = run(g, c, 60, tape).outcome;
    const auto b = run_to_classification(g, c, 60, tape);
    CHECK(a.classification == b.classification);
    CHECK(a.time == b.time);
  }
}

TEST_CASE("valid windows") {
  const RegularGraph t = build_tree(3, 5, false);
  CHECK(valid_window(t, 0, 5) == 5);
  CHECK(valid_window(t, t.n() - 1, 5) == 0);
  CHECK(valid_window(t, t.layer_end(1), 5) == 3);  // first depth-2 vertex
}

TEST_CASE("windowed root trajectory equals the full run") {
  Rng rng(RandomSeed{4, 4});
  for (int k : {3, 4, 5})
    for (int rep = 0; rep < 10; ++rep) {
      const RegularGraph t = build_tree(k, 4, false);
      SpinConfiguration c = random_config(t.n(), rng);
      const TieBreakTape tape(RandomSeed{static_cast<std::uint64_t>(rep), static_cast<std::uint64_t>(k)});
      const RunResult full = run(t, c, 4, tape);
      SpinConfiguration work = c, scratch(t.n());
      const std::uint32_t code = root_trajectory_windowed(t, work, scratch, 4, tape);
      for (int s = 0; s < static_cast<int>(full.trajectory.size()); ++s) CHECK(spin_at(code, s) == full.trajectory[s][0]);
    }
}

TEST_CASE("generic rule step reproduces the majority step") {
  Rng rng(RandomSeed{6, 6});
  const RegularGraph g = sample_random_regular(100, 4, RandomSeed{6, 7});
  const TieBreakTape tape(RandomSeed{6, 8});
  const LocalRule rule = majority_rule(TieRule::KeepFlip);
  for (int t = 0; t < 5; ++t) {
    const SpinConfiguration c = random_config(100, rng);
    CHECK(rule_step(g, c, t, tape, rule) == majority_step(g, c, t, tape));
  }
}

TEST_CASE("keep/flip commutes with the global spin flip") {
  Rng rng(RandomSeed{7, 7});
  for (int rep = 0; rep < 10; ++rep) {
    const RegularGraph g = sample_random_regular(300, 4, RandomSeed{static_cast<std::uint64_t>(rep), 8});
    const TieBreakTape tape(RandomSeed{static_cast<std::uint64_t>(rep), 9}, TieRule::KeepFlip);
    const SpinConfiguration c = random_config(300, rng);
    const RunResult a = run(g, c, 15, tape), b = run(g, negate(c), 15, tape);
    REQUIRE(a.trajectory.size() == b.trajectory.size());
    for (std::size_t t = 0; t < a.trajectory.size(); ++t) CHECK(b.trajectory[t] == negate(a.trajectory[t]));
  }
}

TEST_CASE("keep/flip can reverse the order at a shared tie") {
  const RegularGraph t = build_tree(4, 1, false);
  const SpinConfiguration hi{1, 1, 1, -1, -1}, lo{-1, 1, 1, -1, -1};
  const auto flip = [](std::uint32_t, int) { return -1; };
  const auto a = majority_step(t, hi, 0, TieBreakTape::from_function(flip, TieRule::KeepFlip));
  const auto b = majority_step(t, lo, 0, TieBreakTape::from_function(flip, TieRule::KeepFlip));
  CHECK_FALSE(dominates(a, b));
  const auto c = majority_step(t, hi, 0, TieBreakTape::from_function(flip, TieRule::TapeValue));
  const auto d = majority_step(t, lo, 0, TieBreakTape::from_function(flip, TieRule::TapeValue));
  CHECK(dominates(c, d));
}

TEST_CASE("tape-value rule preserves the partial order, exhaustively on small trees") {
  struct Case {
    int k;
    int depth;
    bool rooted;
  };
  for (const Case cs : {Case{3, 2, false}, Case{4, 2, true}, Case{4, 1, false}}) {
    const RegularGraph t = build_tree(cs.k, cs.depth, cs.rooted);
    const std::uint32_t n = t.n();
    REQUIRE(n <= 13);
    for (std::uint64_t tape_seed = 0; tape_seed < 3; ++tape_seed) {
      const TieBreakTape tape(RandomSeed{tape_seed, 77}, TieRule::TapeValue);
      const FieldSequence u{1, -1, 1, 1, -1};
      std::uint64_t violations = 0;
      for (std::uint32_t code = 0; code < (1U << n); ++code) {
        SpinConfiguration lo(n);
        for (std::uint32_t v = 0; v < n; ++v) lo[v] = ((code >> v) & 1U) ? 1 : -1;
        for (std::uint32_t v = 0; v < n; ++v) {
          if (lo[v] > 0) continue;
          SpinConfiguration hi = lo;
          hi[v] = 1;
          const auto opt = cs.rooted ? std::optional<FieldSequence>(u) : std::nullopt;
          const RunResult a = run(t, hi, 4, tape, opt), b = run(t, lo, 4, tape, opt);
          const std::size_t len = std::min(a.trajectory.size(), b.trajectory.size());
          for (std::size_t s = 0; s < len; ++s)
            if (!dominates(a.trajectory[s], b.trajectory[s])) ++violations;
        }
      }
      CHECK(violations == 0);
    }
  }
}

TEST_CASE("trajectory csv and outcome json") {
  const RegularGraph t = build_tree(3, 1, false);
  const RunResult r = run(t, SpinConfiguration{-1, 1, 1, -1}, 2, TieBreakTape(RandomSeed{0, 0}));
  std::ostringstream out;
  write_trajectory_csv(out, r.trajectory);
  CHECK(out.str().rfind("t,vertex,spin\n", 0) == 0);
  CHECK(outcome_json(r.outcome).find("classification") != std::string::npos);
}
