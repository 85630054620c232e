#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "genrank/numeric/tensor.hpp"

namespace genrank {

struct GradCheckOptions {
  double step = 1e-4;
  double tolerance = 1e-4;
  // Components whose analytic gradient is at or below this are not compared.
  double min_magnitude = 1e-6;
};

struct GradCheckResult {
  std::size_t compared = 0;
  std::size_t failed = 0;
  double max_relative_error = 0.0;
  std::string worst;  // "<tensor>[r,c] analytic=.. numeric=.."

  bool ok() const { return failed == 0; }
};

// Central finite differences over every component of `params`. `loss` must read
// the current contents of `params`; they are restored after each probe.
inline GradCheckResult check_gradients(std::vector<Tensor<double>>& params,
                                       const std::vector<Tensor<double>>& analytic,
                                       const std::vector<std::string>& names,
                                       const std::function<double()>& loss,
                                       const GradCheckOptions& options = {}) {
  if (params.size() != analytic.size()) throw ConfigError("check_gradients: size mismatch");
  GradCheckResult result;
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto& p = params[t];
    for (Index r = 0; r < p.rows(); ++r) {
      for (Index c = 0; c < p.cols(); ++c) {
        const double a = analytic[t](r, c);
        if (std::abs(a) <= options.min_magnitude) continue;
        const double saved = p(r, c);
        p(r, c) = saved + options.step;
        const double up = loss();
        p(r, c) = saved - options.step;
        const double down = loss();
        p(r, c) = saved;
        const double n = (up - down) / (2.0 * options.step);
        const double rel = std::abs(a - n) / std::max(std::abs(a), std::abs(n));
        ++result.compared;
        if (rel > options.tolerance) ++result.failed;
        if (rel > result.max_relative_error) {
          result.max_relative_error = rel;
          result.worst = (t < names.size() ? names[t] : std::to_string(t)) + "[" + std::to_string(r) + "," +
                         std::to_string(c) + "] analytic=" + std::to_string(a) + " numeric=" + std::to_string(n);
        }
      }
    }
  }
  return result;
}

}  // namespace genrank
