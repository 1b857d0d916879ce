#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "dpl/cli/config.hpp"

namespace dpl::cli {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitResource = 3 };

/// Metric name to value; values are exact decimal text, so equal runs give
/// byte-identical reports.
using Report = std::map<std::string, std::string>;

/// `key = value` lines in key order.
std::string format_report(const Report& r);

/// Runs dp-train (`pg` false) or pg-train for the configured task. Writes
/// <out_dir>/train_log.tsv, <out_dir>/timing.tsv, a checkpoint after every
/// epoch and <out_dir>/metrics.txt with the final evaluation. With
/// `resume = true` it continues from the checkpoint's last epoch.
Report cmd_train(const RunConfig& cfg, bool pg, std::ostream& out);

/// Evaluates the checkpoint on the configured split; writes <out_dir>/eval.txt.
Report cmd_eval(const RunConfig& cfg, std::ostream& out);

/// p_success of `query` under the checkpoint and its best proof, written to
/// <out_dir>/proof.txt and <out_dir>/proof.json; report in <out_dir>/prove.txt.
Report cmd_prove(const RunConfig& cfg, std::ostream& out);

/// Exact solvers against brute-force enumeration on the configured task;
/// report in <out_dir>/oracle.txt. The report's `pass` is 1 or 0.
Report cmd_oracle_check(const RunConfig& cfg, std::ostream& out);

/// Dispatches a command by name and maps failures to exit codes, writing
/// the message to `err`.
int run_command(const std::string& command, const RunConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace dpl::cli
