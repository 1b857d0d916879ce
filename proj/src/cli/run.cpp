#include "dpl/cli/run.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include "dpl/dp/solver.hpp"
#include "dpl/logic/parser.hpp"
#include "dpl/pg/policy_trainer.hpp"
#include "dpl/scorer/params.hpp"
#include "dpl/tasks/addition.hpp"
#include "dpl/tasks/kg_train.hpp"
#include "dpl/tasks/mask_oracle.hpp"
#include "dpl/tasks/proof.hpp"

namespace dpl::cli {

namespace {

namespace fs = std::filesystem;

std::string num(double v) { return format_double(v); }
std::string num(std::size_t v) { return std::to_string(v); }

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes through a temporary file so readers never see a partial file.
void write_file(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw InputError("cannot write '" + tmp + "'");
    os << content;
    if (!os.flush()) throw InputError("write failed for '" + tmp + "'");
  }
  fs::rename(tmp, path);
}

std::string hex64(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

enum class Task { Logic, Addition, KG, Kinship };

Task parse_task(const std::string& s) {
  if (s == "logic") return Task::Logic;
  if (s == "addition") return Task::Addition;
  if (s == "kg") return Task::KG;
  if (s == "kinship") return Task::Kinship;
  throw UsageError("task must be logic, addition, kg or kinship, got '" + s + "'");
}

DerivationOptions derivation_options(const RunConfig& c) {
  DerivationOptions d;
  d.resolution.occurs_check = c.flag("occurs_check");
  d.memory = c.flag("memory");
  const std::int64_t depth = c.integer("max_depth");
  if (depth < 1) throw UsageError("max_depth must be at least 1");
  d.max_depth = static_cast<int>(depth);
  d.max_derivations = c.count("max_derivations");
  return d;
}

DPOptions dp_options(const RunConfig& c) {
  DPOptions o;
  o.derivation = derivation_options(c);
  o.max_states = c.count("max_states");
  return o;
}

OptimizerConfig optimizer_config(const RunConfig& c) {
  OptimizerConfig o;
  o.kind = c.str("optimizer");
  o.lr = c.real("lr");
  o.clip_norm = c.real("clip_norm");
  if (!(o.lr > 0.0)) throw UsageError("lr must be positive");
  if (o.clip_norm < 0.0) throw UsageError("clip_norm must be non-negative");
  return o;
}

ScorerConfig scorer_config(const RunConfig& c) {
  ScorerConfig s;
  s.dim = c.count("scorer.dim");
  s.k_var = c.count("scorer.k_var");
  s.k_int = c.count("scorer.k_int");
  s.aggregator = parse_aggregator(c.str("scorer.aggregator"));
  s.init_std = c.real("scorer.init_std");
  if (s.dim == 0) throw UsageError("scorer.dim must be positive");
  return s;
}

PolicyTrainConfig pg_config(const RunConfig& c) {
  PolicyTrainConfig p;
  p.algo = c.str("pg.algo");
  p.ppo.clip = c.real("ppo.clip");
  p.ppo.entropy_coef = c.real("ppo.entropy");
  p.ppo.critic_coef = c.real("ppo.critic");
  p.ppo.epochs = static_cast<int>(c.count("ppo.epochs"));
  p.ppo.minibatch = c.count("ppo.minibatch");
  p.ppo.kl_stop = c.real("ppo.kl_stop");
  p.ppo.rollouts = static_cast<int>(c.count("pg.rollouts"));
  p.ppo.optimizer = optimizer_config(c);
  p.reinforce.optimizer = optimizer_config(c);
  p.reinforce.w_max = c.real("reinforce.w_max");
  p.reinforce.baseline = c.flag("reinforce.baseline");
  p.queries_per_iter = c.count("pg.queries_per_iter");
  p.derivation = derivation_options(c);
  p.seed = static_cast<std::uint64_t>(c.integer("seed"));
  return p;
}

std::vector<LabeledQuery> parse_labeled_queries(const std::string& path, const Program& program) {
  std::istringstream in(read_file(path));
  std::vector<LabeledQuery> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '%') continue;
    const std::string where = path + ":" + std::to_string(lineno) + ": ";
    auto tab = line.rfind('\t');
    if (tab == std::string::npos) throw InputError(where + "expected goal<TAB>label");
    const std::string label = line.substr(tab + 1);
    if (label != "0" && label != "1") throw InputError(where + "label must be 0 or 1, got '" + label + "'");
    try {
      out.push_back({parse_query(line.substr(0, tab), program), label == "1" ? 1 : 0, static_cast<int>(out.size())});
    } catch (const ParseError& e) {
      throw InputError(where + e.what());
    } catch (const ArityError& e) {
      throw InputError(where + e.what());
    }
  }
  if (out.empty()) throw InputError(path + ": no queries");
  return out;
}

Program load_program(const std::string& path) {
  try {
    return parse_program(read_file(path));
  } catch (const ParseError& e) {
    throw InputError(path + ": " + e.what());
  } catch (const ArityError& e) {
    throw InputError(path + ": " + e.what());
  }
}

struct TaskData {
  Task task = Task::Logic;
  Program program;
  std::vector<LabeledQuery> train, test;
  std::optional<KGDataset> kg;
  std::vector<KGQuery> kg_queries;
  std::vector<Triple> kg_eval;
  std::unordered_map<std::string, double> priors;
  std::optional<AdditionData> add;

  const Program& prog() const { return kg ? kg->program : program; }
  bool logical() const { return task != Task::Addition; }

  std::string symbols_hash() const {
    if (!logical()) return "addition";
    std::uint64_t h = 1469598103934665603ULL;
    const SymbolTable& s = prog().symbols();
    for (std::size_t i = 0; i < s.size(); ++i) {
      for (unsigned char ch : s.name(static_cast<SymbolId>(i))) h = (h ^ ch) * 1099511628211ULL;
      h = (h ^ 0xffU) * 1099511628211ULL;
    }
    return hex64(h);
  }
};

void write_kinship(const KinshipData& kd, const fs::path& dir) {
  fs::create_directories(dir);
  write_file((dir / "rules.dpl").string(), kd.rules);
  write_file((dir / "train.tsv").string(), format_triples(kd.train));
  write_file((dir / "valid.tsv").string(), format_triples(kd.valid));
  write_file((dir / "test.tsv").string(), format_triples(kd.test));
}

/// Builds the configured task's data; generated kinship data is written
/// under <out_dir>/data when `export_generated` is set.
TaskData load_task(const RunConfig& c, bool export_generated) {
  TaskData d;
  d.task = parse_task(c.str("task"));
  const auto data_seed = static_cast<std::uint64_t>(c.integer("data_seed"));
  switch (d.task) {
    case Task::Logic: {
      d.program = load_program(c.existing_file("program"));
      d.train = parse_labeled_queries(c.existing_file("queries"), d.program);
      d.test = c.has("test_queries") ? parse_labeled_queries(c.existing_file("test_queries"), d.program) : d.train;
      break;
    }
    case Task::KG:
    case Task::Kinship: {
      if (d.task == Task::KG) {
        d.kg = load_kg(c.existing_file("kg.train"), c.existing_file("kg.valid"), c.existing_file("kg.test"),
                       c.existing_file("kg.rules"));
      } else {
        KinshipSpec spec;
        spec.families = static_cast<int>(c.count("kinship.families"));
        spec.children = static_cast<int>(c.count("kinship.children"));
        spec.grandchildren_min = static_cast<int>(c.count("kinship.grandchildren_min"));
        spec.grandchildren_max = static_cast<int>(c.count("kinship.grandchildren_max"));
        spec.fact_fraction = c.real("kinship.fact_fraction");
        spec.valid_fraction = c.real("kinship.valid_fraction");
        spec.seed = data_seed;
        KinshipData kd = generate_kinship(spec);
        if (export_generated) write_kinship(kd, fs::path(c.str("out_dir")) / "data");
        d.kg = build_kg(kd.rules, kd.train, kd.valid, kd.test);
      }
      if (d.kg->valid.empty()) throw InputError("knowledge graph has no validation (training query) triples");
      const CorruptMode mode = parse_corrupt_mode(c.str("kg.corrupt"));
      d.kg_queries = kg_training_queries(*d.kg, d.kg->valid, c.count("kg.train_negatives"), mode, data_seed);
      const std::string& split = c.str("kg.split");
      if (split == "test") d.kg_eval = d.kg->test;
      else if (split == "valid") d.kg_eval = d.kg->valid;
      else throw UsageError("kg.split must be test or valid");
      if (c.has("kg.priors")) d.priors = load_priors(c.existing_file("kg.priors"));
      break;
    }
    case Task::Addition: {
      const std::int64_t n = c.integer("addition.n");
      if (n < 1 || n > 6) throw UsageError("addition.n must lie in [1, 6]");
      d.add = generate_addition_dataset(c.count("addition.train"), c.count("addition.test"), static_cast<int>(n),
                                        c.count("addition.feature_dim"), c.real("addition.sigma"), data_seed);
      if (d.add->train.empty() || d.add->test.empty()) throw UsageError("addition.train and addition.test must be positive");
      break;
    }
  }
  return d;
}

ScorerParams fresh_params(const TaskData& d, const RunConfig& c, bool critic,
                          std::optional<std::uint64_t> init_seed = std::nullopt) {
  ScorerConfig sc = scorer_config(c);
  sc.readout = critic;
  const auto seed = init_seed ? *init_seed : static_cast<std::uint64_t>(c.integer("seed")) + (critic ? 1 : 0);
  ScorerParams p;
  if (d.task == Task::Addition) {
    p = make_addition_params(sc, d.add->prototypes.dim(), seed);
  } else {
    std::mt19937_64 rng(seed);
    p = ScorerParams::random(sc, d.prog().symbols().size(), d.prog().signature().max_arity(), rng);
  }
  p.metadata()["task"] = c.str("task");
  p.metadata()["symbols"] = d.symbols_hash();
  return p;
}

/// Explicit report of every way a checkpoint can disagree with the config.
void check_compatible(const ScorerParams& got, const ScorerParams& want, const std::string& path) {
  auto fail = [&](const std::string& what, const std::string& cfg_v, const std::string& ckpt_v) {
    throw InputError("checkpoint/config mismatch in '" + path + "': " + what + " is " + cfg_v +
                     " in the config but " + ckpt_v + " in the checkpoint");
  };
  auto meta = [](const ScorerParams& p, const std::string& k) {
    auto it = p.metadata().find(k);
    return it == p.metadata().end() ? std::string("(none)") : it->second;
  };
  const ScorerConfig &g = got.config(), &w = want.config();
  if (meta(got, "task") != meta(want, "task")) fail("task", meta(want, "task"), meta(got, "task"));
  if (g.dim != w.dim) fail("scorer.dim", num(w.dim), num(g.dim));
  if (g.k_var != w.k_var) fail("scorer.k_var", num(w.k_var), num(g.k_var));
  if (g.k_int != w.k_int) fail("scorer.k_int", num(w.k_int), num(g.k_int));
  if (g.aggregator != w.aggregator) fail("scorer.aggregator", to_string(w.aggregator), to_string(g.aggregator));
  if (g.feature_dim != w.feature_dim) fail("feature dimension", num(w.feature_dim), num(g.feature_dim));
  if (g.readout != w.readout) fail("value readout", w.readout ? "on" : "off", g.readout ? "on" : "off");
  if (got.n_symbols() != want.n_symbols()) fail("symbol table size", num(want.n_symbols()), num(got.n_symbols()));
  if (meta(got, "symbols") != meta(want, "symbols"))
    fail("symbol table fingerprint", meta(want, "symbols"), meta(got, "symbols"));
  if (got.max_arity() != want.max_arity()) fail("max arity", num(want.max_arity()), num(got.max_arity()));
}

ScorerParams load_checkpoint(const std::string& path, const ScorerParams& expected) {
  if (!fs::exists(path)) throw InputError("no checkpoint at '" + path + "'; run dp-train or pg-train first");
  ScorerParams p = ScorerParams::load_file(path);
  check_compatible(p, expected, path);
  return p;
}

Report evaluate(const TaskData& d, const ScorerParams& params, const RunConfig& c, std::ostream* proofs) {
  Report r;
  r["task"] = c.str("task");
  if (d.task == Task::Addition) {
    AdditionEval ev = evaluate_addition(d.add->test, d.add->store, params);
    r["sum_accuracy"] = num(ev.sum_accuracy);
    r["digit_accuracy"] = num(ev.digit_accuracy);
    r["test_samples"] = num(ev.count);
    return r;
  }
  Scorer model(params);
  if (d.task == Task::Logic) {
    const DPOptions opts = dp_options(c);
    double loss = 0, pos = 0, neg = 0;
    std::size_t n_pos = 0, n_neg = 0, correct = 0;
    for (std::size_t i = 0; i < d.test.size(); ++i) {
      const LabeledQuery& q = d.test[i];
      const double p = success_probability_dp(q.goal, d.prog(), model, opts);
      char key[32];
      std::snprintf(key, sizeof key, "query.%04zu.p", i);
      r[key] = num(p);
      loss += (1.0 - 2.0 * q.label) * p;
      (q.label ? pos : neg) += p;
      (q.label ? n_pos : n_neg) += 1;
      correct += (p > 0.5) == (q.label == 1);
    }
    r["loss"] = num(loss);
    r["accuracy"] = num(static_cast<double>(correct) / static_cast<double>(d.test.size()));
    r["mean_p_pos"] = num(n_pos ? pos / static_cast<double>(n_pos) : 0.0);
    r["mean_p_neg"] = num(n_neg ? neg / static_cast<double>(n_neg) : 0.0);
    r["queries"] = num(d.test.size());
    return r;
  }
  KGEvalConfig ec;
  ec.negatives = c.count("kg.negatives");
  ec.mode = parse_corrupt_mode(c.str("kg.corrupt"));
  ec.seed = static_cast<std::uint64_t>(c.integer("seed"));
  ec.dp = dp_options(c);
  ec.mc_samples = c.count("mc_samples");
  ec.beam_width = c.count("beam_width");
  ec.prior_weight = c.real("kg.prior_weight");
  ec.priors = d.priors.empty() ? nullptr : &d.priors;
  ec.export_proofs = true;
  KGEval ev = evaluate_kg(*d.kg, d.kg_eval, model, ec, proofs);
  r["mrr"] = num(ev.metrics.mrr);
  for (const auto& [k, v] : ev.metrics.hits) r["hits_at_" + std::to_string(k)] = num(v);
  r["mean_p_true"] = num(ev.mean_p_true);
  r["proofs_expected"] = num(ev.proofs_expected);
  r["proofs_replayed"] = num(ev.proofs_replayed);
  r["mc_fallbacks"] = num(ev.mc_fallbacks);
  r["queries"] = num(ev.queries);
  r["negatives"] = num(ec.negatives);
  return r;
}

std::string join_row(const std::vector<std::string>& cells) {
  std::string s;
  for (std::size_t i = 0; i < cells.size(); ++i) s += (i ? "\t" : "") + cells[i];
  return s + "\n";
}

/// Keeps the header and the rows of epochs <= `epochs`.
void truncate_log(const std::string& path, std::size_t epochs) {
  std::istringstream in(read_file(path));
  std::string line, kept;
  bool header = true;
  while (std::getline(in, line)) {
    if (!header) {
      std::size_t e = std::stoul(line.substr(0, line.find('\t')));
      if (e > epochs) continue;
    }
    header = false;
    kept += line + "\n";
  }
  write_file(path, kept);
}

/// One training method on one task. Rows start with the epoch number.
class Runner {
 public:
  virtual ~Runner() = default;
  virtual std::vector<std::string> header() const = 0;
  virtual std::vector<std::vector<std::string>> epoch(std::size_t e) = 0;
  virtual void save_state(std::ostream& os) const = 0;
  virtual void load_state(std::istream& is) = 0;
  virtual void finish(Report&) const {}
  /// Training loss of the last epoch, for choosing among restarts.
  virtual double last_loss() const { return 0.0; }
};

class LogicDPRunner final : public Runner {
 public:
  LogicDPRunner(const Program& program, std::vector<LabeledQuery> queries, ScorerParams& params, const RunConfig& c)
      : program_(program), queries_(std::move(queries)), params_(params), opts_(dp_options(c)),
        opt_(optimizer_config(c), params.size()) {
    cfg_.optimizer = optimizer_config(c);
    cfg_.batch_size = c.count("batch_size");
    cfg_.objective = c.str("objective");
    if (cfg_.objective != "linear" && cfg_.objective != "log") throw UsageError("objective must be linear or log");
  }
  std::vector<std::string> header() const override {
    return {"epoch", "loss", "objective_j", "mean_p_pos", "mean_p_neg", "grad_norm", "updates"};
  }
  std::vector<std::vector<std::string>> epoch(std::size_t e) override {
    EpochStats s = dp_train_epoch(queries_, program_, params_, nullptr, opt_, opts_, cfg_);
    loss_ = s.loss;
    return {{num(e), num(s.loss), num(s.objective_j), num(s.mean_p_pos), num(s.mean_p_neg), num(s.grad_norm),
             num(s.updates)}};
  }
  void save_state(std::ostream& os) const override { opt_.save_state(os); }
  void load_state(std::istream& is) override { opt_.load_state(is); }
  double last_loss() const override { return loss_; }

 private:
  double loss_ = 0.0;
  const Program& program_;
  std::vector<LabeledQuery> queries_;
  ScorerParams& params_;
  DPOptions opts_;
  DPTrainConfig cfg_;
  Optimizer opt_;
};

class AdditionDPRunner final : public Runner {
 public:
  AdditionDPRunner(const AdditionData& data, ScorerParams& params, const RunConfig& c)
      : data_(data), params_(params), opt_(optimizer_config(c), params.size()),
        batch_(c.count("batch_size")), objective_(c.str("objective")),
        rng_(static_cast<std::uint64_t>(c.integer("seed"))) {
    if (objective_ != "linear" && objective_ != "log") throw UsageError("objective must be linear or log");
  }
  std::vector<std::string> header() const override {
    return {"epoch", "loss", "mean_p", "test_sum_accuracy", "test_digit_accuracy"};
  }
  std::vector<std::vector<std::string>> epoch(std::size_t e) override {
    AdditionEpochStats s = addition_dp_epoch(data_.train, data_.store, params_, opt_, batch_, objective_, rng_);
    loss_ = s.loss;
    AdditionEval ev = evaluate_addition(data_.test, data_.store, params_);
    return {{num(e), num(s.loss), num(s.mean_p), num(ev.sum_accuracy), num(ev.digit_accuracy)}};
  }
  void save_state(std::ostream& os) const override {
    os << "rng " << rng_ << '\n';
    opt_.save_state(os);
  }
  void load_state(std::istream& is) override {
    std::string tag;
    if (!(is >> tag >> rng_) || tag != "rng") throw InputError("malformed training state");
    opt_.load_state(is);
  }
  double last_loss() const override { return loss_; }

 private:
  double loss_ = 0.0;
  const AdditionData& data_;
  ScorerParams& params_;
  Optimizer opt_;
  std::size_t batch_;
  std::string objective_;
  std::mt19937_64 rng_;
};

class AdditionPGRunner final : public Runner {
 public:
  AdditionPGRunner(const AdditionData& data, ScorerParams& params, const RunConfig& c)
      : data_(data), params_(params), opt_(optimizer_config(c), params.size()),
        batch_(c.count("batch_size")), iters_(c.count("pg.iters_per_epoch")),
        rollouts_(static_cast<int>(c.count("pg.rollouts"))), w_max_(c.real("reinforce.w_max")),
        rng_(static_cast<std::uint64_t>(c.integer("seed"))) {
    if (c.str("pg.algo") != "reinforce")
      throw UsageError("addition pg-train uses masked REINFORCE; set pg.algo = reinforce");
    if (batch_ == 0) batch_ = data.train.size();
    if (rollouts_ < 1) throw UsageError("pg.rollouts must be positive");
    if (iters_ == 0) throw UsageError("pg.iters_per_epoch must be positive");
  }
  std::vector<std::string> header() const override {
    return {"epoch", "iteration", "mean_weight", "grad_norm", "rollouts_valid"};
  }
  std::vector<std::vector<std::string>> epoch(std::size_t e) override {
    std::vector<std::vector<std::string>> rows;
    std::vector<AdditionSample> batch;
    loss_ = 0.0;
    for (std::size_t it = 0; it < iters_; ++it) {
      batch.clear();
      for (std::size_t i = 0; i < batch_; ++i) batch.push_back(data_.train[rng_() % data_.train.size()]);
      AdditionPGStats s = addition_pg_iteration(batch, data_.store, params_, opt_, rollouts_, w_max_, rng_);
      valid_ = valid_ && s.all_rollouts_valid;
      loss_ -= s.mean_weight / static_cast<double>(iters_);
      rows.push_back({num(e), num((e - 1) * iters_ + it + 1), num(s.mean_weight), num(s.grad_norm),
                      s.all_rollouts_valid ? "1" : "0"});
    }
    return rows;
  }
  void save_state(std::ostream& os) const override {
    os << "rng " << rng_ << '\n' << "valid " << (valid_ ? 1 : 0) << '\n';
    opt_.save_state(os);
  }
  void load_state(std::istream& is) override {
    std::string tag, tag2;
    int v = 0;
    if (!(is >> tag >> rng_ >> tag2 >> v) || tag != "rng" || tag2 != "valid")
      throw InputError("malformed training state");
    valid_ = v != 0;
    opt_.load_state(is);
  }
  void finish(Report& r) const override { r["rollouts_valid"] = valid_ ? "1" : "0"; }
  /// Minus the epoch's mean importance weight, an estimate of P(sum correct).
  double last_loss() const override { return loss_; }

 private:
  double loss_ = 0.0;
  const AdditionData& data_;
  ScorerParams& params_;
  Optimizer opt_;
  std::size_t batch_, iters_;
  int rollouts_;
  double w_max_;
  std::mt19937_64 rng_;
  bool valid_ = true;
};

class LogicPGRunner final : public Runner {
 public:
  LogicPGRunner(const TaskData& d, ScorerParams& policy, ScorerParams& critic, const RunConfig& c)
      : iters_(c.count("pg.iters_per_epoch")) {
    if (iters_ == 0) throw UsageError("pg.iters_per_epoch must be positive");
    if (d.kg) {
      kg_ = std::make_unique<KGTrainer>(*d.kg, d.kg_queries, policy, critic, pg_config(c));
      trainer_ = &kg_->trainer();
    } else {
      own_ = std::make_unique<PolicyTrainer>(d.program, d.train, policy, critic, pg_config(c));
      trainer_ = own_.get();
    }
  }
  std::vector<std::string> header() const override {
    return {"epoch",   "iteration",     "mean_return_pos", "mean_return_neg", "success_rate",
            "entropy", "clip_fraction", "critic_loss",     "mean_weight",     "grad_norm"};
  }
  std::vector<std::vector<std::string>> epoch(std::size_t e) override {
    std::vector<std::vector<std::string>> rows;
    loss_ = 0.0;
    for (std::size_t it = 0; it < iters_; ++it) {
      PolicyIterationLog l = trainer_->iterate();
      loss_ -= l.stats.mean_return / static_cast<double>(iters_);
      rows.push_back({num(e), num(static_cast<std::size_t>(l.iteration)), num(l.mean_return_pos),
                      num(l.mean_return_neg), num(l.stats.success_rate), num(l.stats.entropy),
                      num(l.stats.clip_fraction), num(l.stats.critic_loss), num(l.stats.mean_weight),
                      num(l.stats.grad_norm)});
    }
    return rows;
  }
  void save_state(std::ostream& os) const override { trainer_->save_state(os); }
  void load_state(std::istream& is) override { trainer_->load_state(is); }
  /// Minus the epoch's mean return.
  double last_loss() const override { return loss_; }

 private:
  double loss_ = 0.0;
  std::size_t iters_;
  std::unique_ptr<KGTrainer> kg_;
  std::unique_ptr<PolicyTrainer> own_;
  PolicyTrainer* trainer_ = nullptr;
};

std::string meta_or(const ScorerParams& p, const std::string& k, const std::string& dflt) {
  auto it = p.metadata().find(k);
  return it == p.metadata().end() ? dflt : it->second;
}

void print_report(std::ostream& out, const Report& r) { out << format_report(r); }

}  // namespace

std::string format_report(const Report& r) {
  std::string s;
  for (const auto& [k, v] : r) s += k + " = " + v + "\n";
  return s;
}

Report cmd_train(const RunConfig& c, bool pg, std::ostream& out) {
  TaskData d = load_task(c, true);
  const fs::path out_dir = c.str("out_dir");
  fs::create_directories(out_dir);
  const std::string stage = pg ? "pg" : "dp";
  const std::string ckpt = c.checkpoint_path();
  if (!fs::path(ckpt).parent_path().empty()) fs::create_directories(fs::path(ckpt).parent_path());
  const std::size_t epochs = c.count("epochs");
  const bool with_critic = pg && d.logical();

  ScorerParams policy = fresh_params(d, c, false);
  ScorerParams critic = with_critic ? fresh_params(d, c, true) : ScorerParams();
  std::size_t start = 0;
  std::string state_text;
  if (c.flag("resume")) {
    ScorerParams loaded = load_checkpoint(ckpt, policy);
    if (meta_or(loaded, "stage", "") != stage)
      throw InputError("cannot resume: checkpoint '" + ckpt + "' was written by " + meta_or(loaded, "stage", "?") +
                       "-train");
    start = std::stoul(meta_or(loaded, "epoch", "0"));
    policy = std::move(loaded);
    if (with_critic) critic = load_checkpoint(ckpt + ".critic", critic);
    state_text = read_file(ckpt + ".state");
  }

  auto make_runner = [&](ScorerParams& params, ScorerParams& crit) -> std::unique_ptr<Runner> {
    if (d.task == Task::Addition) {
      if (pg) return std::make_unique<AdditionPGRunner>(*d.add, params, c);
      return std::make_unique<AdditionDPRunner>(*d.add, params, c);
    }
    if (pg) return std::make_unique<LogicPGRunner>(d, params, crit, c);
    std::vector<LabeledQuery> queries = d.kg ? kg_labeled_queries(*d.kg, d.kg_queries) : d.train;
    return std::make_unique<LogicDPRunner>(d.prog(), std::move(queries), params, c);
  };

  // Restarts: short warm-ups from several initializations; training
  // continues from the seed with the lowest training loss.
  const std::size_t restarts = c.count("restarts");
  if (restarts == 0) throw UsageError("restarts must be at least 1");
  auto init_seed = static_cast<std::uint64_t>(c.integer("seed"));
  if (restarts > 1 && start == 0) {
    double best = 0.0;
    std::string warmup_valid;
    const auto base = init_seed;
    for (std::size_t k = 0; k < restarts; ++k) {
      ScorerParams trial = fresh_params(d, c, false, base + k);
      ScorerParams trial_critic = with_critic ? fresh_params(d, c, true) : ScorerParams();
      auto r = make_runner(trial, trial_critic);
      for (std::size_t e = 1; e <= c.count("restart_epochs"); ++e) r->epoch(e);
      out << "restart " << k << " seed " << base + k << " loss " << num(r->last_loss()) << '\n';
      Report trial_report;
      r->finish(trial_report);
      if (auto it = trial_report.find("rollouts_valid"); it != trial_report.end())
        warmup_valid = warmup_valid == "0" ? "0" : it->second;
      if (k == 0 || r->last_loss() < best) {
        best = r->last_loss();
        init_seed = base + k;
      }
    }
    policy = fresh_params(d, c, false, init_seed);
    policy.metadata()["init_seed"] = std::to_string(init_seed);
    if (!warmup_valid.empty()) policy.metadata()["warmup_rollouts_valid"] = warmup_valid;
  }
  std::unique_ptr<Runner> runner = make_runner(policy, critic);
  if (!state_text.empty()) {
    std::istringstream is(state_text);
    std::size_t e = 0;
    std::string tag;
    if (!(is >> tag >> e) || tag != "epoch" || e != start)
      throw InputError("training state '" + ckpt + ".state' does not match the checkpoint epoch");
    runner->load_state(is);
  }

  const std::string log_path = (out_dir / "train_log.tsv").string();
  const std::string timing_path = (out_dir / "timing.tsv").string();
  if (start == 0) {
    write_file(log_path, join_row(runner->header()));
    write_file(timing_path, join_row({"epoch", "seconds"}));
  } else {
    truncate_log(log_path, start);
    truncate_log(timing_path, start);
  }
  std::ofstream log(log_path, std::ios::app), timing(timing_path, std::ios::app);
  if (!log || !timing) throw InputError("cannot append to logs in '" + out_dir.string() + "'");

  for (std::size_t e = start + 1; e <= epochs; ++e) {
    auto t0 = std::chrono::steady_clock::now();
    auto rows = runner->epoch(e);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    for (const auto& row : rows) log << join_row(row);
    log.flush();
    timing << e << '\t' << secs << '\n';
    timing.flush();

    std::ostringstream st;
    st << "epoch " << e << '\n';
    runner->save_state(st);
    write_file(ckpt + ".state", st.str());
    if (with_critic) {
      std::ostringstream cs;
      critic.save(cs);
      write_file(ckpt + ".critic", cs.str());
    }
    policy.metadata()["stage"] = stage;
    policy.metadata()["epoch"] = std::to_string(e);
    std::ostringstream ps;
    policy.save(ps);
    write_file(ckpt, ps.str());
    out << "epoch " << e << "/" << epochs << '\t' << join_row(rows.back());
  }

  std::ofstream proofs;
  if (d.kg) proofs.open(out_dir / "proofs.txt", std::ios::trunc);
  Report r = evaluate(d, policy, c, d.kg ? &proofs : nullptr);
  r["stage"] = stage;
  r["epochs"] = num(epochs);
  if (restarts > 1) r["init_seed"] = meta_or(policy, "init_seed", "?");
  runner->finish(r);
  if (meta_or(policy, "warmup_rollouts_valid", "1") == "0") r["rollouts_valid"] = "0";
  write_file((out_dir / "metrics.txt").string(), format_report(r));
  print_report(out, r);
  return r;
}

Report cmd_eval(const RunConfig& c, std::ostream& out) {
  TaskData d = load_task(c, false);
  const fs::path out_dir = c.str("out_dir");
  fs::create_directories(out_dir);
  ScorerParams params = load_checkpoint(c.checkpoint_path(), fresh_params(d, c, false));
  std::ofstream proofs;
  if (d.kg) proofs.open(out_dir / "eval_proofs.txt", std::ios::trunc);
  Report r = evaluate(d, params, c, d.kg ? &proofs : nullptr);
  write_file((out_dir / "eval.txt").string(), format_report(r));
  print_report(out, r);
  return r;
}

Report cmd_prove(const RunConfig& c, std::ostream& out) {
  TaskData d = load_task(c, false);
  if (!d.logical()) throw UsageError("prove needs a logic or knowledge-graph task");
  if (!c.has("query")) throw UsageError("prove needs query = <goal>");
  const fs::path out_dir = c.str("out_dir");
  fs::create_directories(out_dir);
  ScorerParams params = load_checkpoint(c.checkpoint_path(), fresh_params(d, c, false));
  const std::size_t known = d.prog().symbols().size();
  std::vector<std::string> warnings;
  Goal goal;
  try {
    goal = parse_query(c.str("query"), d.prog(), &warnings);
  } catch (const ParseError& e) {
    throw InputError(std::string("query: ") + e.what());
  } catch (const ArityError& e) {
    throw InputError(std::string("query: ") + e.what());
  }
  if (d.prog().symbols().size() > known) {
    std::string names;
    for (std::size_t i = known; i < d.prog().symbols().size(); ++i)
      names += (names.empty() ? "" : ", ") + d.prog().symbols().name(static_cast<SymbolId>(i));
    throw InputError("query mentions symbols unknown to the checkpoint: " + names);
  }
  for (const auto& w : warnings) out << "warning: " << w << '\n';

  Scorer model(params);
  std::mt19937_64 rng(static_cast<std::uint64_t>(c.integer("seed")));
  ProveResult pr = prove(goal, d.prog(), model, dp_options(c), c.count("beam_width"), c.count("mc_samples"), rng);
  Report r;
  r["query"] = to_string(goal, d.prog().symbols());
  r["p"] = num(pr.p);
  r["exact"] = pr.exact ? "1" : "0";
  if (!pr.exact) {
    r["stderr"] = num(pr.stderr_);
    r["mc_samples"] = num(c.count("mc_samples"));
  }
  if (pr.proof) {
    ProofTree tree = export_proof_tree(pr.proof->derivation, d.prog());
    r["proof_p"] = num(pr.proof->prob);
    r["proof_replays"] = replay_proof(goal, d.prog(), proof_steps(parse_proof_tree_json(proof_tree_json(tree))),
                                      dp_options(c).derivation.resolution)
                             ? "1"
                             : "0";
    write_file((out_dir / "proof.txt").string(), proof_tree_text(tree));
    write_file((out_dir / "proof.json").string(), proof_tree_json(tree));
    out << proof_tree_text(tree);
  } else {
    r["proof"] = "none";
    r["failure"] = pr.failure.empty() ? "no successful derivation" : pr.failure;
  }
  write_file((out_dir / "prove.txt").string(), format_report(r));
  print_report(out, r);
  return r;
}

Report cmd_oracle_check(const RunConfig& c, std::ostream& out) {
  TaskData d = load_task(c, false);
  const fs::path out_dir = c.str("out_dir");
  fs::create_directories(out_dir);
  Report r;
  r["task"] = c.str("task");
  std::mt19937_64 rng(static_cast<std::uint64_t>(c.integer("seed")));
  bool pass = true;

  if (d.task == Task::Addition) {
    const int n = d.add->n;
    double max_diff = 0.0, max_mass = 0.0;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    auto random_dist = [&] {
      DigitDist p{};
      double s = 0;
      for (double& x : p) s += (x = -std::log(1.0 - u(rng)));
      for (double& x : p) x /= s;
      return p;
    };
    std::size_t pairs = 0;
    for (int len = 1; len <= std::min(n, 2); ++len) {
      const std::int64_t lim = pow10(len);
      for (std::size_t k = 0; k < c.count("oracle.pairs"); ++k, ++pairs) {
        std::vector<DigitDist> a(static_cast<std::size_t>(len)), b(static_cast<std::size_t>(len));
        for (auto& x : a) x = random_dist();
        for (auto& x : b) x = random_dist();
        std::vector<double> brute(static_cast<std::size_t>(2 * lim - 1), 0.0);
        for (std::int64_t x = 0; x < lim; ++x)
          for (std::int64_t y = 0; y < lim; ++y) {
            double p = 1.0;
            for (int i = 0; i < len; ++i) {
              const std::int64_t place = pow10(len - 1 - i);
              p *= a[static_cast<std::size_t>(i)][static_cast<std::size_t>((x / place) % 10)] *
                   b[static_cast<std::size_t>(i)][static_cast<std::size_t>((y / place) % 10)];
            }
            brute[static_cast<std::size_t>(x + y)] += p;
          }
        double mass = 0.0;
        for (std::int64_t s = 0; s < 2 * lim - 1; ++s) {
          const double p = mnist_sum_probability(a, b, s);
          max_diff = std::max(max_diff, std::abs(p - brute[static_cast<std::size_t>(s)]));
          mass += p;
        }
        max_mass = std::max(max_mass, std::abs(mass - 1.0));
      }
    }
    std::size_t states = 0, mismatches = 0;
    for (int len = 1; len <= std::min(n, 3); ++len) {
      std::size_t checked = 0;
      mismatches += exhaustive_mask_mismatches(len, &checked);
      CompletionCheck cc = completion_check(len);
      mismatches += cc.mismatches;
      states += checked + cc.states;
    }
    r["carry_pairs"] = num(pairs);
    r["carry_max_abs_diff"] = num(max_diff);
    r["carry_max_mass_error"] = num(max_mass);
    r["mask_states"] = num(states);
    r["mask_mismatches"] = num(mismatches);
    pass = max_diff <= 1e-12 && max_mass <= 1e-9 && mismatches == 0;
  } else {
    const std::string ckpt = c.checkpoint_path();
    ScorerParams params = fresh_params(d, c, false);
    r["model"] = "random_init";
    if (fs::exists(ckpt)) {
      params = load_checkpoint(ckpt, params);
      r["model"] = "checkpoint";
    }
    Scorer model(params);
    const DPOptions opts = dp_options(c);
    std::vector<Goal> goals;
    if (d.kg) {
      for (const auto& t : d.kg_eval) goals.push_back(d.kg->goal(t));
    } else {
      for (const auto* qs : {&d.train, &d.test})
        for (const auto& q : *qs) goals.push_back(q.goal);
    }
    if (goals.size() > c.count("oracle.queries")) goals.resize(c.count("oracle.queries"));
    double max_diff = 0.0;
    std::size_t within = 0, expected = 0, replayed = 0;
    for (const Goal& g : goals) {
      const double dp = success_probability_dp(g, d.prog(), model, opts);
      const double bf = success_probability_bruteforce(g, d.prog(), model, opts.derivation);
      max_diff = std::max(max_diff, std::abs(dp - bf));
      MonteCarloEstimate mc = success_probability_mc(g, d.prog(), model, opts.derivation, c.count("mc_samples"), rng);
      within += std::abs(mc.p - dp) <= 3.0 * mc.stderr_ + 1e-12;
      if (dp > 0.0) {
        ++expected;
        auto bp = best_proof(g, d.prog(), model, opts.derivation, c.count("beam_width"));
        if (bp) {
          ProofTree tree = parse_proof_tree_json(proof_tree_json(export_proof_tree(bp->derivation, d.prog())));
          replayed += replay_proof(g, d.prog(), proof_steps(tree), opts.derivation.resolution);
        }
      }
    }
    r["queries"] = num(goals.size());
    r["dp_max_abs_diff"] = num(max_diff);
    r["mc_within_3se"] = num(within);
    r["proofs_expected"] = num(expected);
    r["proofs_replayed"] = num(replayed);
    pass = max_diff <= 1e-12 && replayed == expected;
  }
  r["pass"] = pass ? "1" : "0";
  write_file((out_dir / "oracle.txt").string(), format_report(r));
  print_report(out, r);
  return r;
}

int run_command(const std::string& command, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    if (command == "dp-train") {
      cmd_train(cfg, false, out);
    } else if (command == "pg-train") {
      cmd_train(cfg, true, out);
    } else if (command == "eval") {
      cmd_eval(cfg, out);
    } else if (command == "prove") {
      cmd_prove(cfg, out);
    } else if (command == "oracle-check") {
      if (cmd_oracle_check(cfg, out).at("pass") != "1") {
        err << "error: oracle check failed\n";
        return kExitData;
      }
    } else {
      throw UsageError("unknown command '" + command + "'");
    }
    return kExitOk;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const GoalSpaceExplosion& e) {
    err << "error: " << e.what() << '\n'
        << "hint: the reachable goal space exceeds max_states; lower max_depth, keep memory = true, "
           "raise max_states, or train with pg-train instead\n";
    return kExitResource;
  } catch (const ResourceLimit& e) {
    err << "error: " << e.what() << '\n'
        << "hint: raise max_derivations or lower max_depth\n";
    return kExitResource;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace dpl::cli
