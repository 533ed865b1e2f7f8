#include "majority/dynamics.hpp"

#include <algorithm>
#include <ostream>
#include <sstream>

namespace majority {

TieBreakTape TieBreakTape::from_function(std::function<int(std::uint32_t, int)> bits, TieRule rule) {
  TieBreakTape tape;
  tape.override_ = std::move(bits);
  tape.rule_ = rule;
  return tape;
}

LocalRule majority_rule(TieRule rule) {
  return [rule](std::int8_t self, std::span<const std::int8_t> nb, int u, int bit) -> std::int8_t {
    int sum = u;
    for (auto s : nb) sum += s;
    if (sum > 0) return 1;
    if (sum < 0) return -1;
    if (rule == TieRule::TapeValue) return static_cast<std::int8_t>(bit);
    return static_cast<std::int8_t>(bit > 0 ? self : -self);
  };
}

std::string to_string(Classification c) {
  switch (c) {
    case Classification::ConsensusPlus: return "consensus+1";
    case Classification::ConsensusMinus: return "consensus-1";
    case Classification::FixedPoint: return "fixed-point";
    case Classification::TwoCycle: return "two-cycle";
    case Classification::Undecided: return "undecided";
  }
  return "undecided";
}

bool step_prefix(const RegularGraph& g, const SpinConfiguration& cur, SpinConfiguration& next, int t,
                 const TieBreakTape& tape, std::uint32_t count, const FieldSequence* u) {
  bool tie = false;
  for (std::uint32_t v = 0; v < count; ++v) {
    int sum = 0;
    for (auto w : g.neighbors(v)) sum += cur[w];
    if (v == 0 && u) sum += (*u)[t];
    if (sum > 0)
      next[v] = 1;
    else if (sum < 0)
      next[v] = -1;
    else {
      tie = true;
      next[v] = tape.resolve(cur[v], v, t);
    }
  }
  return tie;
}

namespace {

void check_config(const RegularGraph& g, const SpinConfiguration& config) {
  if (config.size() != g.n()) throw UsageError("configuration length does not match graph");
}

void check_field(const FieldSequence& u, int t) {
  if (t < 0 || static_cast<std::size_t>(t) >= u.size()) throw UsageError("field sequence shorter than horizon");
}

}  // namespace

SpinConfiguration majority_step(const RegularGraph& g, const SpinConfiguration& config, int t,
                                const TieBreakTape& tape) {
  check_config(g, config);
  SpinConfiguration next(config.size());
  step_prefix(g, config, next, t, tape, g.n());
  return next;
}

SpinConfiguration rooted_step(const RegularGraph& g, const SpinConfiguration& config, int t,
                              const TieBreakTape& tape, const FieldSequence& u) {
  if (g.kind() != GraphKind::RootedTree) throw UsageError("rooted_step requires a rooted tree");
  check_config(g, config);
  check_field(u, t);
  SpinConfiguration next(config.size());
  step_prefix(g, config, next, t, tape, g.n(), &u);
  return next;
}

SpinConfiguration rule_step(const RegularGraph& g, const SpinConfiguration& config, int t,
                            const TieBreakTape& tape, const LocalRule& rule, const FieldSequence* u) {
  check_config(g, config);
  if (u) check_field(*u, t);
  SpinConfiguration next(config.size());
  std::vector<std::int8_t> nb;
  for (std::uint32_t v = 0; v < g.n(); ++v) {
    nb.clear();
    for (auto w : g.neighbors(v)) nb.push_back(config[w]);
    const int field = (u && v == 0) ? (*u)[t] : 0;
    next[v] = rule(config[v], nb, field, tape.bit(v, t));
  }
  return next;
}

namespace {

std::optional<Classification> consensus(const SpinConfiguration& c) {
  if (c.empty()) return std::nullopt;
  const auto first = c[0];
  if (std::all_of(c.begin(), c.end(), [&](auto s) { return s == first; }))
    return first > 0 ? Classification::ConsensusPlus : Classification::ConsensusMinus;
  return std::nullopt;
}

// Classification state machine shared by run() and run_to_classification().
// tie[s] records whether computing config(s+1) from config(s) met a tie.
struct Classifier {
  std::optional<RunOutcome> check(int t, const SpinConfiguration& now, const SpinConfiguration* prev,
                                  const SpinConfiguration* prev2, bool tie1, bool tie2) const {
    if (auto c = consensus(now)) return RunOutcome{*c, t};
    if (prev && !tie1 && now == *prev) return RunOutcome{Classification::FixedPoint, t};
    if (prev2 && !tie1 && !tie2 && now == *prev2) return RunOutcome{Classification::TwoCycle, t};
    return std::nullopt;
  }
};

}  // namespace

RunResult run(const RegularGraph& g, const SpinConfiguration& init, int horizon, const TieBreakTape& tape,
              const std::optional<FieldSequence>& u) {
  if (horizon < 0) throw UsageError("horizon must be non-negative");
  check_config(g, init);
  if (u) {
    if (g.kind() != GraphKind::RootedTree) throw UsageError("field requires a rooted tree");
    if (horizon > 0) check_field(*u, horizon - 1);
  }
  RunResult res;
  res.trajectory.push_back(init);
  std::vector<bool> ties;
  Classifier cl;
  std::optional<RunOutcome> outcome = cl.check(0, init, nullptr, nullptr, false, false);
  for (int t = 0; t < horizon; ++t) {
    SpinConfiguration next(g.n());
    ties.push_back(step_prefix(g, res.trajectory.back(), next, t, tape, g.n(), u ? &*u : nullptr));
    res.trajectory.push_back(std::move(next));
    if (!outcome) {
      const int s = t + 1;
      const auto& tr = res.trajectory;
      outcome = cl.check(s, tr[s], &tr[s - 1], s >= 2 ? &tr[s - 2] : nullptr, ties[s - 1], s >= 2 && ties[s - 2]);
    }
  }
  res.outcome = outcome.value_or(RunOutcome{Classification::Undecided, horizon});
  return res;
}

RunOutcome run_to_classification(const RegularGraph& g, const SpinConfiguration& init, int horizon,
                                 const TieBreakTape& tape) {
  check_config(g, init);
  Classifier cl;
  if (auto o = cl.check(0, init, nullptr, nullptr, false, false)) return *o;
  // Ring of three buffers: config(s) lives in buf[s % 3].
  SpinConfiguration buf[3] = {init, SpinConfiguration(g.n()), SpinConfiguration(g.n())};
  bool tie_prev = false, tie_prev2 = false;
  for (int t = 0; t < horizon; ++t) {
    const bool tie = step_prefix(g, buf[t % 3], buf[(t + 1) % 3], t, tape, g.n());
    tie_prev2 = tie_prev;
    tie_prev = tie;
    const SpinConfiguration* prev2 = t >= 1 ? &buf[(t + 2) % 3] : nullptr;
    if (auto o = cl.check(t + 1, buf[(t + 1) % 3], &buf[t % 3], prev2, tie_prev, tie_prev2)) return *o;
  }
  return RunOutcome{Classification::Undecided, horizon};
}

int valid_window(const RegularGraph& tree, std::uint32_t vertex, int /*horizon*/) {
  if (!tree.is_tree()) throw UsageError("valid_window requires a tree");
  return tree.tree_depth() - tree.depth(vertex);
}

std::uint32_t root_trajectory_windowed(const RegularGraph& tree, SpinConfiguration& work, SpinConfiguration& scratch,
                                       int horizon, const TieBreakTape& tape) {
  const int D = tree.tree_depth();
  if (horizon > D) throw UsageError("horizon exceeds tree depth");
  std::uint32_t code = work[0] > 0 ? 1U : 0U;
  scratch.resize(work.size());
  for (int t = 0; t < horizon; ++t) {
    const std::uint32_t count = tree.layer_end(D - 1 - t);
    step_prefix(tree, work, scratch, t, tape, count);
    std::copy(scratch.begin(), scratch.begin() + count, work.begin());
    if (work[0] > 0) code |= 1U << (t + 1);
  }
  return code;
}

void write_trajectory_csv(std::ostream& out, const std::vector<SpinConfiguration>& trajectory) {
  out << "t,vertex,spin\n";
  for (std::size_t t = 0; t < trajectory.size(); ++t)
    for (std::size_t v = 0; v < trajectory[t].size(); ++v) out << t << ',' << v << ',' << int(trajectory[t][v]) << '\n';
}

std::string outcome_json(const RunOutcome& o) {
  std::ostringstream ss;
  ss << "{\"classification\":\"" << to_string(o.classification) << "\",\"time\":" << o.time << "}";
  return ss.str();
}

}  // namespace majority
