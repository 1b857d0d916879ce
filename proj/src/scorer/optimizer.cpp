#include "dpl/scorer/optimizer.hpp"

#include "dpl/scorer/params.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace dpl {

double l2_norm(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

Optimizer::Optimizer(OptimizerConfig cfg, std::size_t n) : cfg_(std::move(cfg)) {
  if (cfg_.kind != "adam" && cfg_.kind != "sgd")
    throw std::invalid_argument("unknown optimizer '" + cfg_.kind + "' (expected adam or sgd)");
  if (cfg_.kind == "adam") {
    m_.assign(n, 0.0);
    v_.assign(n, 0.0);
  }
}

void Optimizer::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != grad.size()) throw std::invalid_argument("gradient size does not match parameters");
  ++t_;
  double scale = 1.0;
  if (cfg_.clip_norm > 0) {
    double n = l2_norm(grad);
    if (n > cfg_.clip_norm) scale = cfg_.clip_norm / n;
  }
  if (cfg_.kind == "sgd") {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= cfg_.lr * scale * grad[i];
    return;
  }
  if (m_.size() != params.size()) throw std::invalid_argument("optimizer state size does not match parameters");
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    double g = scale * grad[i];
    m_[i] = cfg_.beta1 * m_[i] + (1 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i] + (1 - cfg_.beta2) * g * g;
    params[i] -= cfg_.lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg_.eps);
  }
}

void Optimizer::save_state(std::ostream& os) const {
  os << "optimizer " << cfg_.kind << ' ' << t_ << ' ' << m_.size() << '\n';
  for (const auto* vec : {&m_, &v_}) {
    for (std::size_t i = 0; i < vec->size(); ++i) os << (i ? " " : "") << format_double((*vec)[i]);
    os << '\n';
  }
}

void Optimizer::load_state(std::istream& is) {
  std::string tag, kind;
  long t = 0;
  std::size_t n = 0;
  if (!(is >> tag >> kind >> t >> n) || tag != "optimizer") throw std::runtime_error("malformed optimizer state");
  if (kind != cfg_.kind || n != m_.size())
    throw std::runtime_error("optimizer state does not match the configured optimizer");
  for (auto* vec : {&m_, &v_})
    for (std::size_t i = 0; i < n; ++i) {
      std::string x;
      if (!(is >> x)) throw std::runtime_error("truncated optimizer state");
      auto r = std::from_chars(x.data(), x.data() + x.size(), (*vec)[i]);
      if (r.ec != std::errc() || r.ptr != x.data() + x.size())
        throw std::runtime_error("bad number in optimizer state: " + x);
    }
  t_ = t;
}

}  // namespace dpl
