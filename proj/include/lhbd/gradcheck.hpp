#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lhbd/autograd.hpp"
#include "lhbd/random.hpp"

namespace lhbd {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_input;
  int probes = 0;
};

/// Compares analytic gradients of a scalar function against central finite
/// differences. `loss` is re-evaluated after perturbing entries of `inputs` in
/// place; up to `probes_per_input` randomly chosen entries of each input are
/// checked. Entries whose analytic and numeric derivatives are both below
/// `abs_floor` are skipped (they carry no signal at double precision).
GradCheckResult check_gradients(const std::function<ag::Var()>& loss,
                                const std::vector<std::pair<std::string, ag::Var*>>& inputs,
                                Rng& rng, double step = 1e-4, int probes_per_input = 24,
                                double abs_floor = 1e-9);

}  // namespace lhbd
