#include "dpl/dp/carry.hpp"

#include <cmath>
#include <string>

namespace dpl {

std::int64_t pow10(int n) {
  std::int64_t r = 1;
  for (int i = 0; i < n; ++i) r *= 10;
  return r;
}

namespace {

void validate(std::span<const DigitDist> a, std::span<const DigitDist> b) {
  if (a.size() != b.size() || a.empty()) throw MalformedDistribution("digit sequences must have equal, positive length");
  if (a.size() > 17) throw MalformedDistribution("sequence length exceeds 17 digits");
  for (auto seq : {a, b}) {
    for (const auto& d : seq) {
      double z = 0;
      for (double v : d) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw MalformedDistribution("digit probabilities must be finite and non-negative");
        z += v;
      }
      if (std::abs(z - 1.0) > 1e-6) throw MalformedDistribution("digit distribution sums to " + std::to_string(z));
    }
  }
}

// Digit of `target` at sequence position i (0 = most significant) among n.
int target_digit(std::int64_t target, int n, int i) { return static_cast<int>((target / pow10(n - 1 - i)) % 10); }

}  // namespace

double mnist_sum_probability(std::span<const DigitDist> a, std::span<const DigitDist> b, std::int64_t target,
                             CarryTables* tables) {
  validate(a, b);
  const int n = static_cast<int>(a.size());
  if (target < 0 || target >= 2 * pow10(n)) return 0.0;
  std::array<double, 2> m{1.0, 0.0};
  if (tables) {
    tables->carry_in.assign(static_cast<std::size_t>(n), {});
    tables->joint.assign(static_cast<std::size_t>(n), {});
  }
  for (int i = n - 1; i >= 0; --i) {
    const auto& pa = a[static_cast<std::size_t>(i)];
    const auto& pb = b[static_cast<std::size_t>(i)];
    const int s = target_digit(target, n, i);
    std::array<double, 2> out{0.0, 0.0};
    std::size_t row = static_cast<std::size_t>(n - 1 - i);
    if (tables) tables->carry_in[row] = m;
    for (int c = 0; c < 2; ++c) {
      if (m[static_cast<std::size_t>(c)] == 0.0 && !tables) continue;
      for (int x = 0; x < 10; ++x) {
        for (int y = 0; y < 10; ++y) {
          int t = x + y + c;
          double w = m[static_cast<std::size_t>(c)] * pa[static_cast<std::size_t>(x)] * pb[static_cast<std::size_t>(y)];
          if (tables) tables->joint[row][static_cast<std::size_t>(t % 10)][static_cast<std::size_t>(t / 10)] += w;
          if (t % 10 == s) out[static_cast<std::size_t>(t / 10)] += w;
        }
      }
    }
    m = out;
  }
  return m[static_cast<std::size_t>(target / pow10(n))];
}

double mnist_sum_probability_grad(std::span<const DigitDist> a, std::span<const DigitDist> b, std::int64_t target,
                                  std::vector<DigitDist>& da, std::vector<DigitDist>& db) {
  validate(a, b);
  const int n = static_cast<int>(a.size());
  da.assign(a.size(), DigitDist{});
  db.assign(b.size(), DigitDist{});
  if (target < 0 || target >= 2 * pow10(n)) return 0.0;
  // Forward masses m[k] entering the k-th processed position (LSD first).
  std::vector<std::array<double, 2>> m(static_cast<std::size_t>(n) + 1);
  m[0] = {1.0, 0.0};
  for (int k = 0; k < n; ++k) {
    int i = n - 1 - k;
    const auto& pa = a[static_cast<std::size_t>(i)];
    const auto& pb = b[static_cast<std::size_t>(i)];
    const int s = target_digit(target, n, i);
    std::array<double, 2> out{0.0, 0.0};
    for (int c = 0; c < 2; ++c)
      for (int x = 0; x < 10; ++x)
        for (int y = 0; y < 10; ++y) {
          int t = x + y + c;
          if (t % 10 == s)
            out[static_cast<std::size_t>(t / 10)] +=
                m[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)] * pa[static_cast<std::size_t>(x)] *
                pb[static_cast<std::size_t>(y)];
        }
    m[static_cast<std::size_t>(k) + 1] = out;
  }
  const auto top = static_cast<std::size_t>(target / pow10(n));
  std::array<double, 2> adj{0.0, 0.0};
  adj[top] = 1.0;
  for (int k = n - 1; k >= 0; --k) {
    int i = n - 1 - k;
    const auto ii = static_cast<std::size_t>(i);
    const auto& pa = a[ii];
    const auto& pb = b[ii];
    const int s = target_digit(target, n, i);
    std::array<double, 2> prev{0.0, 0.0};
    for (int c = 0; c < 2; ++c) {
      double mc = m[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)];
      for (int x = 0; x < 10; ++x)
        for (int y = 0; y < 10; ++y) {
          int t = x + y + c;
          if (t % 10 != s) continue;
          double g = adj[static_cast<std::size_t>(t / 10)];
          if (g == 0.0) continue;
          auto xx = static_cast<std::size_t>(x), yy = static_cast<std::size_t>(y);
          prev[static_cast<std::size_t>(c)] += g * pa[xx] * pb[yy];
          da[ii][xx] += g * mc * pb[yy];
          db[ii][yy] += g * mc * pa[xx];
        }
    }
    adj = prev;
  }
  return m[static_cast<std::size_t>(n)][top];
}

std::vector<double> sum_distribution(std::span<const DigitDist> a, std::span<const DigitDist> b) {
  validate(a, b);
  const std::int64_t hi = 2 * pow10(static_cast<int>(a.size())) - 1;
  std::vector<double> out(static_cast<std::size_t>(hi));
  for (std::int64_t s = 0; s < hi; ++s) out[static_cast<std::size_t>(s)] = mnist_sum_probability(a, b, s);
  return out;
}

}  // namespace dpl
