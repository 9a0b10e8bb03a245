#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tolnet {

// Error taxonomy. The CLI maps these to distinct exit codes.

// Tensor/layer shape disagreement. Messages name both shapes involved.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Violated precondition of a public operation (negative kappa, empty batch,
// non-scalar backward root, layer index out of range, ...).
class ContractError : public std::runtime_error {
 public:
  explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or missing input data (label records, images, dataset files).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values where the computation requires finite ones.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

using Shape = std::vector<int64_t>;

std::string shape_str(const Shape& s);

inline int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

}  // namespace tolnet
