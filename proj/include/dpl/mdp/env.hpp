#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "dpl/sld/derivation.hpp"

namespace dpl {

class IllegalAction : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// One episode state. The label lives here for reward computation only;
/// legal_actions never reads it.
struct EnvState {
  Goal goal;
  std::vector<Goal> visited;  // goals on the episode path, query first
  int depth = 0;
  int label = 0;
  int query_id = 0;
  VarId next_var = 0;
  bool done = false;
};

struct StepResult {
  EnvState next;
  double reward = 0.0;
  bool done = false;
  std::optional<Outcome> outcome;
};

/// The SLD-resolution MDP: deterministic transitions, reward 2y-1 on
/// reaching True and 0 otherwise, per-episode visited-goal memory, gamma 1.
class ProofEnv {
 public:
  ProofEnv(const Program& program, DerivationOptions opts, std::ostream* trace = nullptr)
      : program_(program), opts_(opts), trace_(trace) {}

  const Program& program() const { return program_; }
  const DerivationOptions& options() const { return opts_; }

  EnvState reset(const Goal& query, int label, int query_id = 0) const;
  CandidateSet legal_actions(const EnvState& s) const;
  StepResult step(const EnvState& s, std::size_t action) const;
  /// As above with the already-computed legal actions of `s`.
  StepResult step(const EnvState& s, const CandidateSet& legal, std::size_t action) const;

 private:
  const Program& program_;
  DerivationOptions opts_;
  std::ostream* trace_;
};

}  // namespace dpl
