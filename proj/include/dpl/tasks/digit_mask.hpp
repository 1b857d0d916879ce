#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>

namespace dpl {

class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using DigitMask = std::array<bool, 10>;

/// True when the lowest `remain_len` digits of `full_sum` are all 9, so no
/// carry can enter the current position from below.
bool max_suffix(std::int64_t full_sum, int remain_len);

/// Digits allowed at position `pos` (0 = most significant) of a length
/// `seq_len` addition whose sum is `full_sum`. `sum_digit` in [0, 19] is
/// the column target: a + b plus the carry from lower positions must equal
/// it. curr_no = 0 masks the first number's digit; curr_no = 1 masks the
/// second's given the first (`prev`).
DigitMask digit_mask(int pos, int seq_len, int sum_digit, std::int64_t full_sum, int curr_no, int prev);

/// Column target at position 0: floor(full_sum / 10^(seq_len - 1)).
int initial_sum_digit(std::int64_t full_sum, int seq_len);

/// Column target at pos + 1 after choosing digits a and b at pos.
int next_sum_digit(int sum_digit, int a, int b, int pos, int seq_len, std::int64_t full_sum);

}  // namespace dpl
