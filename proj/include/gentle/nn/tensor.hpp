#pragma once

#include <cstddef>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gentle/errors.hpp"

namespace gentle::nn {

/// Up to four extents. Image tensors are {C, N, H, W} and feature tensors
/// {D, N}: the batch sits on the second axis, so every tensor's storage is a
/// column-major (batch * spatial) x channel matrix that GEMM consumes directly.
using Shape = std::vector<int>;

inline std::size_t numel(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, [](std::size_t a, int b) { return a * std::size_t(b); });
}

inline std::string to_string(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ']';
  return os.str();
}

template <typename T>
using Buffer = Eigen::Array<T, Eigen::Dynamic, 1>;

template <typename T>
struct Tensor {
  Shape shape;
  Buffer<T> data;

  Tensor() = default;
  explicit Tensor(Shape s, T fill = T(0)) : shape(std::move(s)), data(Buffer<T>::Constant(Eigen::Index(numel(shape)), fill)) {
    check_rank();
  }
  Tensor(Shape s, Buffer<T> values) : shape(std::move(s)), data(std::move(values)) {
    check_rank();
    if (std::size_t(data.size()) != numel(shape))
      throw ShapeError("tensor: " + std::to_string(data.size()) + " values for shape " + to_string(shape));
  }

  Eigen::Index size() const { return data.size(); }
  int dim(std::size_t i) const { return shape.at(i); }
  std::size_t rank() const { return shape.size(); }

  /// Storage viewed as a column-major rows x cols matrix.
  Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>> matrix(Eigen::Index rows, Eigen::Index cols) {
    return {data.data(), rows, cols};
  }
  Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>> matrix(Eigen::Index rows,
                                                                           Eigen::Index cols) const {
    return {data.data(), rows, cols};
  }

 private:
  void check_rank() const {
    if (shape.empty() || shape.size() > 4) throw ShapeError("tensor: rank must be 1..4, got " + to_string(shape));
    for (int e : shape)
      if (e < 0) throw ShapeError("tensor: negative extent in " + to_string(shape));
  }
};

}  // namespace gentle::nn
