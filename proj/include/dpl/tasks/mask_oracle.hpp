// Brute-force completion oracles for the valid-digit mask.
#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "dpl/dp/carry.hpp"
#include "dpl/tasks/digit_mask.hpp"

namespace dpl {

/// Sums reachable as A_low + B_low over all pairs of r-digit numbers.
inline std::vector<bool> reachable_low_sums(int r) {
  const std::int64_t lim = pow10(r);
  std::vector<bool> ok(static_cast<std::size_t>(2 * lim), false);
  for (std::int64_t x = 0; x < lim; ++x)
    for (std::int64_t y = 0; y < lim; ++y) ok[static_cast<std::size_t>(x + y)] = true;
  return ok;
}

/// Whether digit d can be chosen given column target t: exists a
/// completion of the lower positions. `low` is reachable_low_sums(r).
inline bool mask_oracle(int pos, int n, int t, std::int64_t full_sum, int curr_no, int prev, int d,
                        const std::vector<bool>& low) {
  const int r = n - pos - 1;
  const std::int64_t place = pow10(r);
  const std::int64_t rest = full_sum % place;
  auto fits = [&](int a, int b) {
    std::int64_t l = static_cast<std::int64_t>(t - a - b) * place + rest;
    return l >= 0 && l < static_cast<std::int64_t>(low.size()) && low[static_cast<std::size_t>(l)];
  };
  if (curr_no == 1) return fits(prev, d);
  for (int b = 0; b < 10; ++b)
    if (fits(d, b)) return true;
  return false;
}

/// Outcome of checking digit_mask along every state a masked rollout can
/// reach, against the set of interleaved digit prefixes of all (A, B) with
/// A + B == S.
struct CompletionCheck {
  std::size_t states = 0;
  std::size_t mismatches = 0;
};

inline void completion_walk(int n, std::int64_t s, const std::unordered_set<std::string>& prefixes,
                            std::string& prefix, int column, CompletionCheck& out) {
  const int pos = static_cast<int>(prefix.size()) / 2;
  if (pos == n) return;
  const bool second = prefix.size() % 2 == 1;
  const int prev = second ? prefix.back() - '0' : 0;
  DigitMask m = digit_mask(pos, n, column, s, second ? 1 : 0, prev);
  ++out.states;
  for (int d = 0; d < 10; ++d) {
    prefix.push_back(static_cast<char>('0' + d));
    bool valid = prefixes.count(prefix) > 0;
    if (valid != m[static_cast<std::size_t>(d)]) ++out.mismatches;
    if (valid) {
      int next = column;
      if (second && pos + 1 < n) next = next_sum_digit(column, prev, d, pos, n, s);
      completion_walk(n, s, prefixes, prefix, next, out);
    }
    prefix.pop_back();
  }
}

inline CompletionCheck completion_check(int n) {
  CompletionCheck out;
  const std::int64_t lim = pow10(n);
  for (std::int64_t s = 0; s <= 2 * lim - 2; ++s) {
    std::unordered_set<std::string> prefixes;
    for (std::int64_t x = std::max<std::int64_t>(0, s - lim + 1); x < lim && x <= s; ++x) {
      std::int64_t y = s - x;
      std::string full;
      for (int i = 0; i < n; ++i) {
        std::int64_t place = pow10(n - 1 - i);
        full += static_cast<char>('0' + (x / place) % 10);
        full += static_cast<char>('0' + (y / place) % 10);
      }
      for (std::size_t len = 1; len <= full.size(); ++len) prefixes.insert(full.substr(0, len));
    }
    std::string prefix;
    completion_walk(n, s, prefixes, prefix, initial_sum_digit(s, n), out);
  }
  return out;
}

/// Exhaustive comparison over every (pos, column target, sum, curr_no, prev).
inline std::size_t exhaustive_mask_mismatches(int n, std::size_t* checked = nullptr) {
  std::size_t bad = 0, count = 0;
  std::vector<std::vector<bool>> low;
  for (int r = 0; r < n; ++r) low.push_back(reachable_low_sums(r));
  for (int pos = 0; pos < n; ++pos)
    for (int t = 0; t <= 19; ++t)
      for (std::int64_t s = 0; s <= 2 * pow10(n) - 2; ++s)
        for (int curr = 0; curr < 2; ++curr)
          for (int prev = 0; prev < (curr ? 10 : 1); ++prev) {
            DigitMask m = digit_mask(pos, n, t, s, curr, prev);
            for (int d = 0; d < 10; ++d) {
              ++count;
              bad += m[static_cast<std::size_t>(d)] !=
                     mask_oracle(pos, n, t, s, curr, prev, d, low[static_cast<std::size_t>(n - pos - 1)]);
            }
          }
  if (checked) *checked = count;
  return bad;
}

}  // namespace dpl
