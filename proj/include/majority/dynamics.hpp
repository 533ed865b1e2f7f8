#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "majority/common.hpp"
#include "majority/graphs.hpp"

namespace majority {

using SpinConfiguration = std::vector<std::int8_t>;

// How a vertex at a zero neighbor sum uses its tape bit.
//  KeepFlip: keep sigma_i(t) on +1, flip on -1. Commutes with the global spin flip.
//  TapeValue: adopt the tape bit. Preserves the componentwise order under a shared tape.
enum class TieRule { KeepFlip, TapeValue };

// Fair +-1 bit per (vertex, time), derived by hashing; optionally an explicit override.
class TieBreakTape {
 public:
  TieBreakTape() = default;
  explicit TieBreakTape(const RandomSeed& seed, TieRule rule = TieRule::KeepFlip)
      : word_(seed_word(seed)), rule_(rule) {}
  static TieBreakTape from_function(std::function<int(std::uint32_t, int)> bits, TieRule rule = TieRule::KeepFlip);

  int bit(std::uint32_t vertex, int t) const {
    if (override_) return override_(vertex, t);
    return (hash3(word_, vertex, static_cast<std::uint64_t>(t)) >> 63) ? 1 : -1;
  }
  TieRule rule() const { return rule_; }
  // Spin chosen at a tie given the current spin.
  std::int8_t resolve(std::int8_t current, std::uint32_t vertex, int t) const {
    const int b = bit(vertex, t);
    if (rule_ == TieRule::TapeValue) return static_cast<std::int8_t>(b);
    return static_cast<std::int8_t>(b > 0 ? current : -current);
  }

 private:
  std::uint64_t word_ = 0;
  TieRule rule_ = TieRule::KeepFlip;
  std::function<int(std::uint32_t, int)> override_;
};

using FieldSequence = std::vector<int>;

// Generic local rule f(sigma_i, sigma_neighbors, u, tape bit) -> new spin.
using LocalRule = std::function<std::int8_t(std::int8_t, std::span<const std::int8_t>, int, int)>;
LocalRule majority_rule(TieRule rule = TieRule::KeepFlip);

enum class Classification { ConsensusPlus, ConsensusMinus, FixedPoint, TwoCycle, Undecided };
std::string to_string(Classification c);

struct RunOutcome {
  Classification classification = Classification::Undecided;
  int time = 0;
};

struct RunResult {
  std::vector<SpinConfiguration> trajectory;
  RunOutcome outcome;
};

SpinConfiguration majority_step(const RegularGraph& g, const SpinConfiguration& config, int t,
                                const TieBreakTape& tape);

SpinConfiguration rooted_step(const RegularGraph& g, const SpinConfiguration& config, int t,
                              const TieBreakTape& tape, const FieldSequence& u);

// Step under an arbitrary local rule; the field (if any) enters only at the root.
SpinConfiguration rule_step(const RegularGraph& g, const SpinConfiguration& config, int t,
                            const TieBreakTape& tape, const LocalRule& rule,
                            const FieldSequence* u = nullptr);

// In-place kernel used by the fast paths: writes next[0..count) and returns whether any tie occurred.
bool step_prefix(const RegularGraph& g, const SpinConfiguration& cur, SpinConfiguration& next, int t,
                 const TieBreakTape& tape, std::uint32_t count, const FieldSequence* u = nullptr);

RunResult run(const RegularGraph& g, const SpinConfiguration& init, int horizon, const TieBreakTape& tape,
              const std::optional<FieldSequence>& u = std::nullopt);

// Same classification as run() but keeps only the last three configurations.
RunOutcome run_to_classification(const RegularGraph& g, const SpinConfiguration& init, int horizon,
                                 const TieBreakTape& tape);

int valid_window(const RegularGraph& tree, std::uint32_t vertex, int horizon);

// Windowed tree run: at step t only vertices with depth <= D-1-t are updated, so
// every stored value lies inside its valid window. Returns the root trajectory code.
std::uint32_t root_trajectory_windowed(const RegularGraph& tree, SpinConfiguration& work, SpinConfiguration& scratch,
                                       int horizon, const TieBreakTape& tape);

void write_trajectory_csv(std::ostream& out, const std::vector<SpinConfiguration>& trajectory);
std::string outcome_json(const RunOutcome& o);

}  // namespace majority
