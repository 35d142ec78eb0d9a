#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tdiv {

// Timestep-indexed scalar trace. The tag keeps reward and Q traces from
// being mixed up at call sites.
template <typename Tag>
class Trace {
 public:
  Trace() = default;

  explicit Trace(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw std::invalid_argument("trace must contain at least one value");
    for (std::size_t t = 0; t < values_.size(); ++t) {
      if (!std::isfinite(values_[t]))
        throw std::invalid_argument("trace value at timestep " + std::to_string(t + 1) + " is not finite");
    }
  }

  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  friend bool operator==(const Trace&, const Trace&) = default;

 private:
  std::vector<double> values_;
};

using RewardTrace = Trace<struct RewardTag>;
using QTrace = Trace<struct QTag>;

// gamma discounts the Q-targets, beta weights the generator's Q supervision,
// k is the discriminator window length.
struct MdpConfig {
  double gamma = 0.9;
  double beta = 0.7;
  std::size_t k = 16;

  void validate() const;
};

namespace detail {

inline void check_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1), got " + std::to_string(gamma));
}

inline void check_beta(double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in [0, 1], got " + std::to_string(beta));
}

inline void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + " must be finite");
}

template <typename A, typename B>
void check_same_length(const A& a, const B& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("trace length mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
}

}  // namespace detail

inline void MdpConfig::validate() const {
  detail::check_gamma(gamma);
  detail::check_beta(beta);
  if (k < 1) throw std::invalid_argument("window length K must be >= 1");
}

// sum_{t=0}^{K-1} gamma^t r_{t+1}, evaluated in Horner form.
inline double discounted_return(const RewardTrace& r, double gamma) {
  detail::check_gamma(gamma);
  const auto v = r.values();
  double acc = v.back();
  for (std::size_t t = v.size() - 1; t-- > 0;) acc = v[t] + gamma * acc;
  return acc;
}

// target_t = 1/(K-t+1) * sum_{i=t}^{K} gamma^{i-t} r_i  (1-based t).
// The last target is always r_K.
inline QTrace q_targets(const RewardTrace& r, double gamma) {
  detail::check_gamma(gamma);
  const auto v = r.values();
  const std::size_t k = v.size();
  std::vector<double> targets(k);
  double tail = 0.0;
  for (std::size_t t = k; t-- > 0;) {
    tail = t + 1 == k ? v[t] : v[t] + gamma * tail;
    targets[t] = tail / static_cast<double>(k - t);
  }
  return QTrace(std::move(targets));
}

struct QLoss {
  std::vector<double> per_step;  // (target_t - Q_t)^2
  double mean = 0.0;             // (1/K) * sum_t per_step
};

inline QLoss l_q(const QTrace& q, const RewardTrace& r, double gamma) {
  detail::check_same_length(q, r);
  const QTrace targets = q_targets(r, gamma);
  QLoss loss;
  loss.per_step.resize(q.size());
  double sum = 0.0;
  for (std::size_t t = 0; t < q.size(); ++t) {
    const double d = targets[t] - q[t];
    loss.per_step[t] = d * d;
    sum += loss.per_step[t];
  }
  loss.mean = sum / static_cast<double>(q.size());
  return loss;
}

// Generator supervision sum_{t=1}^{K} beta^t Q_t. The exponent starts at 1,
// so beta = 0 switches the term off entirely.
inline double l_t(const QTrace& q, double beta) {
  detail::check_beta(beta);
  double weight = 1.0;
  double sum = 0.0;
  for (const double v : q.values()) {
    weight *= beta;
    sum += weight * v;
  }
  return sum;
}

// Discriminator objective: image and video scores plus the mean Q losses on
// real and generated windows.
inline double assemble_discriminator_loss(double l_i, double l_v, double lq_real, double lq_fake) {
  detail::check_finite(l_i, "image discriminator loss");
  detail::check_finite(l_v, "video discriminator loss");
  detail::check_finite(lq_real, "real-sample Q loss");
  detail::check_finite(lq_fake, "generated-sample Q loss");
  return l_i + l_v + lq_real + lq_fake;
}

inline double assemble_generator_loss(double l_i_fake, double l_v_fake, const QTrace& q_fake, double beta) {
  detail::check_finite(l_i_fake, "image discriminator score");
  detail::check_finite(l_v_fake, "video discriminator score");
  return l_i_fake + l_v_fake + l_t(q_fake, beta);
}

// Bellman consistency residuals: Q_t - (r_t + gamma * Q_{t+1}) for t < K and
// Q_K - r_K. gamma = 1 is admitted here so the undiscounted form can be
// checked too.
inline std::vector<double> bellman_residual(const QTrace& q, const RewardTrace& r, double gamma) {
  detail::check_same_length(q, r);
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in [0, 1]");
  const std::size_t k = q.size();
  std::vector<double> res(k);
  for (std::size_t t = 0; t + 1 < k; ++t) res[t] = q[t] - (r[t] + gamma * q[t + 1]);
  res[k - 1] = q[k - 1] - r[k - 1];
  return res;
}

}  // namespace tdiv
