#include "lhbd/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace lhbd {

GradCheckResult check_gradients(const std::function<ag::Var()>& loss,
                                const std::vector<std::pair<std::string, ag::Var*>>& inputs,
                                Rng& rng, double step, int probes_per_input, double abs_floor) {
  for (const auto& [name, v] : inputs) v->zero_grad();
  ag::backward(loss());

  GradCheckResult result;
  for (const auto& [name, v] : inputs) {
    const Tensor analytic = v->grad().empty() ? Tensor(v->shape()) : v->grad();
    Tensor& value = v->mutable_value();
    const std::size_t n = value.size();
    const int probes = static_cast<int>(std::min<std::size_t>(n, probes_per_input));
    for (int p = 0; p < probes; ++p) {
      const std::size_t i = (static_cast<std::size_t>(probes) == n) ? p : rng.below(n);
      const double saved = value[i];
      double plus, minus;
      {
        ag::NoGradGuard guard;
        value[i] = saved + step;
        plus = loss().value().item();
        value[i] = saved - step;
        minus = loss().value().item();
      }
      value[i] = saved;
      const double numeric = (plus - minus) / (2.0 * step);
      const double a = analytic[i];
      const double scale = std::max(std::abs(a), std::abs(numeric));
      ++result.probes;
      if (scale < abs_floor) continue;
      const double rel = std::abs(a - numeric) / scale;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        char detail[96];
        std::snprintf(detail, sizeof detail, "] analytic %.6g numeric %.6g", a, numeric);
        result.worst_input = name + "[" + std::to_string(i) + detail;
      }
    }
  }
  for (const auto& [name, v] : inputs) v->zero_grad();
  return result;
}

}  // namespace lhbd
