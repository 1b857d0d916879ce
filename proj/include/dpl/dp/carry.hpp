#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace dpl {

using DigitDist = std::array<double, 10>;

/// Per-position tables of the carry DP, least significant position first.
struct CarryTables {
  /// Mass entering the position, by carry-in.
  std::vector<std::array<double, 2>> carry_in;
  /// Joint mass over (column digit s, carry-out c) at the position, before
  /// the target digit is imposed.
  std::vector<std::array<std::array<double, 2>, 10>> joint;
};

class MalformedDistribution : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// P(A + B == target) where A and B are N-digit numbers whose digits are
/// independent with the given distributions, most significant digit first.
/// Runs digit by digit from the least significant position over carry
/// states {0, 1}: O(N * 100 * 2).
double mnist_sum_probability(std::span<const DigitDist> a, std::span<const DigitDist> b, std::int64_t target,
                             CarryTables* tables = nullptr);

/// Same, plus d P / d a[i][k] and d P / d b[i][k].
double mnist_sum_probability_grad(std::span<const DigitDist> a, std::span<const DigitDist> b, std::int64_t target,
                                  std::vector<DigitDist>& da, std::vector<DigitDist>& db);

/// P(A + B == s) for every s in [0, 2 * 10^N - 2].
std::vector<double> sum_distribution(std::span<const DigitDist> a, std::span<const DigitDist> b);

std::int64_t pow10(int n);

}  // namespace dpl
