#include "dpl/tasks/digit_mask.hpp"

#include <string>

#include "dpl/dp/carry.hpp"

namespace dpl {

namespace {

void check_common(int pos, int seq_len, std::int64_t full_sum) {
  if (seq_len < 1 || seq_len > 17) throw DomainError("seq_len must lie in [1, 17]");
  if (pos < 0 || pos >= seq_len) throw DomainError("pos " + std::to_string(pos) + " outside [0, seq_len)");
  if (full_sum < 0 || full_sum > 2 * pow10(seq_len) - 2) throw DomainError("full_sum out of range");
}

}  // namespace

bool max_suffix(std::int64_t full_sum, int remain_len) {
  std::int64_t r = pow10(remain_len);
  return full_sum % r == r - 1;
}

DigitMask digit_mask(int pos, int seq_len, int sum_digit, std::int64_t full_sum, int curr_no, int prev) {
  check_common(pos, seq_len, full_sum);
  if (sum_digit < 0 || sum_digit > 19) throw DomainError("sum_digit must lie in [0, 19]");
  if (curr_no != 0 && curr_no != 1) throw DomainError("curr_no must be 0 or 1");
  if (curr_no == 1 && (prev < 0 || prev > 9)) throw DomainError("prev must be a digit");

  const bool last = pos == seq_len - 1;
  // No carry can arrive from below on the last position or under a 9...9 suffix.
  const bool no_carry = last || max_suffix(full_sum, seq_len - pos - 1);
  DigitMask m{};
  for (int d = 0; d < 10; ++d) {
    if (curr_no == 0) {
      int remain = sum_digit - d;  // b + carry
      m[static_cast<std::size_t>(d)] = remain >= 0 && remain <= (no_carry ? 9 : 10);
    } else {
      int pred = prev + d;
      m[static_cast<std::size_t>(d)] = pred == sum_digit || (!no_carry && pred == sum_digit - 1);
    }
  }
  return m;
}

int initial_sum_digit(std::int64_t full_sum, int seq_len) {
  check_common(0, seq_len, full_sum);
  return static_cast<int>(full_sum / pow10(seq_len - 1));
}

int next_sum_digit(int sum_digit, int a, int b, int pos, int seq_len, std::int64_t full_sum) {
  check_common(pos, seq_len, full_sum);
  if (pos == seq_len - 1) throw DomainError("no position after the last");
  int remain_len = seq_len - pos - 1;
  int digit = static_cast<int>((full_sum / pow10(remain_len - 1)) % 10);
  return 10 * (sum_digit - a - b) + digit;
}

}  // namespace dpl
