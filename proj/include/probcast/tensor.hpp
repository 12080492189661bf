#pragma once

// Dense row-major tensor with an optional gradient slot. The autodiff
// graph, the optimizer, and the checkpoint format all operate on this type.

#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "probcast/errors.hpp"

namespace probcast {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

struct Tensor {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until requested; otherwise matches data

  Tensor() = default;
  explicit Tensor(Shape s) : shape(std::move(s)), data(shape_numel(shape), 0.0) {}
  Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {
    if (data.size() != shape_numel(shape))
      throw shape_error("tensor: data length " + std::to_string(data.size()) +
                        " does not match shape " + shape_str(shape));
  }

  std::size_t numel() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }

  double& at(std::size_t i) { return data[i]; }
  double at(std::size_t i) const { return data[i]; }

  // 2-d accessor; shape must be [rows, cols]
  double& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

}  // namespace probcast
