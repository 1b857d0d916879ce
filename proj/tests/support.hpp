// Shared helpers for the test binaries: finite differences and random
// program generation.
#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dpl/logic/parser.hpp"
#include "dpl/scorer/params.hpp"

namespace dpl::testing {

/// Central differences of f over every coordinate of `params`.
inline std::vector<double> numeric_gradient(std::span<double> params, const std::function<double()>& f,
                                            double eps = 1e-5) {
  std::vector<double> g(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    double keep = params[i];
    params[i] = keep + eps;
    double up = f();
    params[i] = keep - eps;
    double down = f();
    params[i] = keep;
    g[i] = (up - down) / (2 * eps);
  }
  return g;
}

/// |a - n| <= rel * max(|a|, |n|) + abs_tol.
inline bool grad_close(double a, double n, double rel = 1e-4, double abs_tol = 1e-9) {
  return std::abs(a - n) <= rel * std::max(std::abs(a), std::abs(n)) + abs_tol;
}

/// Largest violation ratio; <= 1 means every coordinate passes.
inline double gradient_mismatch(const std::vector<double>& a, const std::vector<double>& n, double rel = 1e-4,
                                double abs_tol = 1e-9) {
  double worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double tol = rel * std::max(std::abs(a[i]), std::abs(n[i])) + abs_tol;
    worst = std::max(worst, std::abs(a[i] - n[i]) / tol);
  }
  return worst;
}

/// A random definite program over predicates p0..p{np-1} (arity 1 or 2),
/// constants c0..c{nc-1}, with facts and rules of body length 1..2 that
/// share variables head-to-body. Returns program text and a query.
struct RandomProgram {
  std::string text;
  std::string query;
};

inline RandomProgram random_program(std::mt19937_64& rng, int np = 3, int nc = 3, int n_facts = 6, int n_rules = 3) {
  std::uniform_int_distribution<int> pred(0, np - 1), cst(0, nc - 1), coin(0, 1);
  std::vector<int> arity(static_cast<std::size_t>(np));
  for (int& a : arity) a = 1 + coin(rng);
  auto atom = [&](int p, const std::vector<std::string>& args) {
    std::string s = "p" + std::to_string(p) + "(";
    for (std::size_t i = 0; i < args.size(); ++i) s += (i ? "," : "") + args[i];
    return s + ")";
  };
  auto cname = [&] { return "c" + std::to_string(cst(rng)); };
  std::ostringstream out;
  for (int f = 0; f < n_facts; ++f) {
    int p = pred(rng);
    std::vector<std::string> args;
    for (int i = 0; i < arity[static_cast<std::size_t>(p)]; ++i) args.push_back(cname());
    out << atom(p, args) << ".\n";
  }
  const std::vector<std::string> vars{"X", "Y", "Z"};
  std::uniform_int_distribution<int> var(0, 2), blen(1, 2);
  for (int r = 0; r < n_rules; ++r) {
    int h = pred(rng);
    std::vector<std::string> hargs;
    for (int i = 0; i < arity[static_cast<std::size_t>(h)]; ++i) hargs.push_back(coin(rng) || i == 0 ? vars[static_cast<std::size_t>(i)] : cname());
    out << atom(h, hargs) << " :- ";
    int n = blen(rng);
    for (int b = 0; b < n; ++b) {
      int p = pred(rng);
      std::vector<std::string> args;
      for (int i = 0; i < arity[static_cast<std::size_t>(p)]; ++i)
        args.push_back(coin(rng) || coin(rng) ? vars[static_cast<std::size_t>(var(rng))] : cname());
      out << (b ? ", " : "") << atom(p, args);
    }
    out << ".\n";
  }
  int q = pred(rng);
  std::vector<std::string> qargs;
  for (int i = 0; i < arity[static_cast<std::size_t>(q)]; ++i) qargs.push_back(coin(rng) ? cname() : "Q" + std::to_string(i));
  return {out.str(), atom(q, qargs)};
}

}  // namespace dpl::testing
