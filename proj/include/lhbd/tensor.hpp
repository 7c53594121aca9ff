#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lhbd {

/// NCHW extents. All tensors in the codec are 4-D; scalars are 1x1x1x1.
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  [[nodiscard]] std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  [[nodiscard]] std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  friend bool operator==(const Shape&, const Shape&) = default;

  [[nodiscard]] std::string str() const;
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0) : shape_(shape), data_(shape.numel(), fill) {}
  Tensor(Shape shape, std::vector<double> data);

  [[nodiscard]] const Shape& shape() const { return shape_; }
  [[nodiscard]] int n() const { return shape_.n; }
  [[nodiscard]] int c() const { return shape_.c; }
  [[nodiscard]] int h() const { return shape_.h; }
  [[nodiscard]] int w() const { return shape_.w; }
  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] bool empty() const { return data_.empty(); }

  double* data() { return data_.data(); }
  [[nodiscard]] const double* data() const { return data_.data(); }
  std::span<double> span() { return data_; }
  [[nodiscard]] std::span<const double> span() const { return data_; }
  std::vector<double>& vec() { return data_; }
  [[nodiscard]] const std::vector<double>& vec() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }
  [[nodiscard]] double at(int n, int c, int y, int x) const { return data_[index(n, c, y, x)]; }

  /// Pointer to the start of channel plane (n, c).
  double* plane(int n, int c) { return data_.data() + index(n, c, 0, 0); }
  [[nodiscard]] const double* plane(int n, int c) const { return data_.data() + index(n, c, 0, 0); }

  [[nodiscard]] std::size_t index(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }

  void fill(double v);
  /// Reinterpret with a new shape of identical element count.
  [[nodiscard]] Tensor reshaped(Shape s) const;

  static Tensor scalar(double v) { return Tensor(Shape{}, v); }
  [[nodiscard]] double item() const;

 private:
  Shape shape_{0, 0, 0, 0};
  std::vector<double> data_;
};

/// Elementwise helpers used outside the autograd graph.
void axpy(double alpha, const Tensor& x, Tensor& y);
[[nodiscard]] double max_abs_diff(const Tensor& a, const Tensor& b);
[[nodiscard]] bool all_finite(const Tensor& t);

void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

}  // namespace lhbd
