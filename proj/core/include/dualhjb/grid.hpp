#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "dualhjb/errors.hpp"

namespace dualhjb {

inline std::vector<double> linspace(double lo, double hi, std::size_t count) {
  if (count < 2) throw DomainError("linspace needs at least two points");
  std::vector<double> out(count);
  const double step = (hi - lo) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) out[i] = lo + step * static_cast<double>(i);
  out.back() = hi;
  return out;
}

/// `count` points log-uniformly spaced on [lo, hi]; both ends positive.
inline std::vector<double> logspace(double lo, double hi, std::size_t count) {
  if (!(lo > 0.0) || !(hi > lo)) throw DomainError("logspace needs 0 < lo < hi");
  auto exps = linspace(std::log(lo), std::log(hi), count);
  for (auto& e : exps) e = std::exp(e);
  exps.front() = lo;
  exps.back() = hi;
  return exps;
}

/// Neumaier-compensated running sum; order dependent but reproducible.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace dualhjb
