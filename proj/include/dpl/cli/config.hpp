#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpl::cli {

/// Bad command line or configuration: unknown key, malformed value.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing or malformed input files, checkpoint mismatches.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat `key = value` configuration over a fixed schema of keys with
/// defaults. Relative paths given in a file resolve against the file's
/// directory; those given as overrides resolve against the working
/// directory.
class RunConfig {
 public:
  RunConfig();

  static RunConfig from_file(const std::string& path);
  /// Parses `key = value` lines; `#` starts a comment.
  static RunConfig from_text(const std::string& text, const std::string& base_dir = "");

  /// `key=value`; relative paths resolve against `base_dir`.
  void set(const std::string& key, const std::string& value, const std::string& base_dir = "");
  void override_with(const std::string& assignment);

  bool has(const std::string& key) const;
  const std::string& str(const std::string& key) const;
  double real(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  std::size_t count(const std::string& key) const;  // non-negative integer
  bool flag(const std::string& key) const;
  /// A path key that must name an existing file.
  std::string existing_file(const std::string& key) const;

  /// Every key with its value, sorted.
  const std::map<std::string, std::string>& values() const { return values_; }
  std::string text() const;

  /// Checkpoint file; defaults to <out_dir>/checkpoint.txt.
  std::string checkpoint_path() const;

 private:
  std::map<std::string, std::string> values_;
};

/// Keys holding filesystem paths.
const std::vector<std::string>& path_keys();

}  // namespace dpl::cli
