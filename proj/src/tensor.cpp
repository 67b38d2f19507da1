#include "mornmt/tensor.hpp"

#include <sstream>
#include <stdexcept>

namespace mornmt {

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << 'x';
    os << s[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
  if (shape_numel(shape) != data.size())
    throw std::invalid_argument("tensor: shape " + shape_str(shape) + " does not match " +
                                std::to_string(data.size()) + " values");
}

Tensor Tensor::zeros(Shape s) {
  Tensor t;
  t.data.assign(shape_numel(s), 0.0);
  t.shape = std::move(s);
  return t;
}

Tensor Tensor::filled(Shape s, double v) {
  Tensor t = zeros(std::move(s));
  t.fill(v);
  return t;
}

Tensor Tensor::vec(std::vector<double> d) {
  Tensor t;
  t.shape = {d.size()};
  t.data = std::move(d);
  return t;
}

Tensor Tensor::matrix(std::size_t r, std::size_t c, std::vector<double> d) {
  return Tensor({r, c}, std::move(d));
}

Tensor Tensor::uniform(Shape s, Rng& rng, double lo, double hi) {
  Tensor t = zeros(std::move(s));
  for (double& x : t.data) x = rng.uniform(lo, hi);
  return t;
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw std::logic_error("rows() on tensor of shape " + shape_str(shape));
  return shape[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw std::logic_error("cols() on tensor of shape " + shape_str(shape));
  return shape[1];
}

bool Tensor::all_finite() const {
  for (double x : data)
    if (!std::isfinite(x)) return false;
  return true;
}

void Tensor::fill(double v) {
  for (double& x : data) x = v;
}

}  // namespace mornmt
