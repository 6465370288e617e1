#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace mblend {

/// Table of ln(n!) for n in [0, size), built by accumulation so that large
/// arguments never overflow.
class LogFactorials {
 public:
  explicit LogFactorials(std::size_t size = 1) { extend(size); }

  double operator()(std::size_t n) {
    if (n >= table_.size()) extend(n + 1);
    return table_[n];
  }

 private:
  void extend(std::size_t size) {
    if (table_.empty()) table_.push_back(0.0);
    while (table_.size() < size) {
      table_.push_back(table_.back() + std::log(static_cast<double>(table_.size())));
    }
  }

  std::vector<double> table_;
};

/// P[X = successes] for X ~ Binomial(trials, p).
inline double binomial_pmf(std::size_t successes, std::size_t trials, double p, LogFactorials& log_fact) {
  if (successes > trials) return 0.0;
  if (p <= 0.0) return successes == 0 ? 1.0 : 0.0;
  if (p >= 1.0) return successes == trials ? 1.0 : 0.0;
  const auto failures = trials - successes;
  const double log_pmf = log_fact(trials) - log_fact(successes) - log_fact(failures) +
                         static_cast<double>(successes) * std::log(p) +
                         static_cast<double>(failures) * std::log1p(-p);
  return std::exp(log_pmf);
}

inline double binomial_pmf(std::size_t successes, std::size_t trials, double p) {
  LogFactorials log_fact(trials + 1);
  return binomial_pmf(successes, trials, p, log_fact);
}

}  // namespace mblend
