#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "mornmt/rng.hpp"

namespace mornmt {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

// Dense row-major tensor of 64-bit floats. Rank 1 and 2 cover everything
// the model needs; higher ranks are representable but unused.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(Shape s, std::vector<double> d);

  static Tensor zeros(Shape s);
  static Tensor filled(Shape s, double v);
  static Tensor vec(std::vector<double> d);
  static Tensor matrix(std::size_t r, std::size_t c, std::vector<double> d);
  static Tensor uniform(Shape s, Rng& rng, double lo, double hi);

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
  std::size_t rank() const { return shape.size(); }

  std::size_t rows() const;
  std::size_t cols() const;

  double& at(std::size_t i) { return data[i]; }
  double at(std::size_t i) const { return data[i]; }
  double& at2(std::size_t i, std::size_t j) { return data[i * cols() + j]; }
  double at2(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool all_finite() const;
  void fill(double v);
};

}  // namespace mornmt
