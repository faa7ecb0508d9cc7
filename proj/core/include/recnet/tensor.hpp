#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace recnet {

using Shape = std::vector<std::size_t>;

// Dense row-major tensor of 64-bit reals. Rank 0 (scalar), 1 and 2 are the
// only ranks used by the model.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor zeros_like(const Tensor& other) { return Tensor(other.shape_); }

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  // rows()/cols() treat a rank-1 tensor as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& at(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::span<double> row(std::size_t r);
  std::span<const double> row(std::size_t r) const;

  double item() const;
  void fill(double value);

  std::string shape_string() const;

 private:
  Shape shape_;
  std::vector<double> values_;
};

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Exact bit-pattern equality of shape and every value.
bool bitwise_equal(const Tensor& a, const Tensor& b);

bool all_finite(const Tensor& t);

// Throws DimensionError mentioning `operand` when the shapes differ.
void require_shape(const Tensor& t, const Shape& expected, const std::string& operand);

}  // namespace recnet
