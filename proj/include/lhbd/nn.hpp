#pragma once

#include <string>
#include <vector>

#include "lhbd/ops.hpp"
#include "lhbd/random.hpp"

namespace lhbd::nn {

using ag::Var;

struct NamedParam {
  std::string name;
  Var* var;
};

using ParamList = std::vector<NamedParam>;

/// Uniform(-bound, bound) tensor.
Tensor uniform_init(Shape s, double bound, Rng& rng);

class Conv2d {
 public:
  Conv2d() = default;
  /// "Same"-style zero padding of k/2; stride 2 halves the size (rounding up).
  Conv2d(int in, int out, int k, int stride, Rng& rng, double gain = 1.0);

  [[nodiscard]] Var forward(const Var& x) const;
  void collect(const std::string& prefix, ParamList& out);
  /// Sets weights and bias to zero (used for residual heads that start as identity).
  void zero();

  Var weight;
  Var bias;
  int stride = 1;
  int pad = 0;
};

/// Stride-2 transposed convolution that exactly doubles (then crops to) the
/// requested output size.
class ConvTranspose2d {
 public:
  ConvTranspose2d() = default;
  ConvTranspose2d(int in, int out, int k, int stride, Rng& rng, double gain = 1.0);

  [[nodiscard]] Var forward(const Var& x, int out_h, int out_w) const;
  void collect(const std::string& prefix, ParamList& out);

  Var weight;  // (C_in, C_out, k, k)
  Var bias;
  int stride = 2;
  int pad = 0;
};

/// Generalized divisive normalization: y_i = x_i / sqrt(beta_i + sum_j gamma_ij x_j^2),
/// or the multiplicative inverse form. beta and gamma are kept nonnegative by
/// squaring their raw parameters.
class Gdn {
 public:
  Gdn() = default;
  Gdn(int channels, bool inverse);

  [[nodiscard]] Var forward(const Var& x) const;
  void collect(const std::string& prefix, ParamList& out);

  Var beta_raw;
  Var gamma_raw;
  bool inverse = false;
};

}  // namespace lhbd::nn
