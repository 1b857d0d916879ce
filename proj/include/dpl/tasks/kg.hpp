#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "dpl/logic/goal.hpp"
#include "dpl/logic/program.hpp"

namespace dpl {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Triple {
  std::string head, relation, tail;
  friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct KGDataset {
  Program program;  // rules, then one fact per training triple
  std::vector<std::string> entities;
  std::vector<std::string> relations;
  std::vector<Triple> train, valid, test;
  /// Clause id of each training triple's fact, keyed by the triple.
  std::map<Triple, int> fact_clause;

  std::set<Triple> known() const;
  /// relation(head, tail) as a ground query.
  Goal goal(const Triple& t) const;
};

/// Reads `head<TAB>relation<TAB>tail` files and a rules program. Names must
/// be lowercase identifiers. Test triples may not appear in train.
KGDataset load_kg(const std::string& train_path, const std::string& valid_path, const std::string& test_path,
                  const std::string& rules_path);

/// Same from in-memory text.
KGDataset build_kg(const std::string& rules_text, const std::vector<Triple>& train, const std::vector<Triple>& valid,
                   const std::vector<Triple>& test);

std::vector<Triple> parse_triples(const std::string& text, const std::string& source);
std::string format_triples(const std::vector<Triple>& triples);

enum class CorruptMode { Head, Tail, Both };
CorruptMode parse_corrupt_mode(const std::string& s);

/// k distinct corruptions of `q` drawn uniformly from the entities not
/// forming a known true triple. Deterministic under `seed`.
std::vector<Triple> sample_negatives(const Triple& q, std::size_t k, const std::vector<std::string>& entities,
                                     CorruptMode mode, const std::set<Triple>& known, std::uint64_t seed);

struct RankResult {
  double true_score = 0.0;
  std::vector<double> corrupt_scores;
  /// 1 + number of corruptions scoring >= the true answer (pessimistic ties).
  std::size_t rank() const;
};

struct RankMetrics {
  double mrr = 0.0;
  std::map<int, double> hits;
};

RankMetrics rank_metrics(const std::vector<RankResult>& results, const std::vector<int>& ns = {1, 3, 10});

/// A synthetic kinship graph: families of three generations with parent,
/// brother, sister, uncle and aunt relations, the recursive uncle/aunt
/// rules, and deliberately unsound rules a policy must learn to avoid.
/// Uncle/aunt triples split into facts (train), training queries (valid)
/// and test; every held-out triple is provable from the facts.
struct KinshipSpec {
  int families = 4;
  int children = 3;         // second generation per root
  int grandchildren_min = 2;
  int grandchildren_max = 4;
  double fact_fraction = 0.4;
  double valid_fraction = 0.3;
  std::uint64_t seed = 1;
};

struct KinshipData {
  std::string rules;
  std::vector<Triple> train, valid, test;
};

KinshipData generate_kinship(const KinshipSpec& spec);

/// Optional per-query prior scores, `goal<TAB>score`, keyed by goal text.
std::unordered_map<std::string, double> load_priors(const std::string& path);

}  // namespace dpl
