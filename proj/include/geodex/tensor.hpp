#pragma once

#include <cstddef>
#include <vector>

namespace geodex {

/// Dense rank-3 array over an n-dimensional index range, row-major.
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(int n) : n_(n), v_(static_cast<std::size_t>(n) * n * n, 0.0) {}
  int dim() const { return n_; }
  double& operator()(int a, int b, int c) { return v_[idx(a, b, c)]; }
  double operator()(int a, int b, int c) const { return v_[idx(a, b, c)]; }
  const std::vector<double>& data() const { return v_; }

 private:
  std::size_t idx(int a, int b, int c) const { return (static_cast<std::size_t>(a) * n_ + b) * n_ + c; }
  int n_ = 0;
  std::vector<double> v_;
};

/// Dense rank-4 array over an n-dimensional index range, row-major.
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(int n) : n_(n), v_(static_cast<std::size_t>(n) * n * n * n, 0.0) {}
  int dim() const { return n_; }
  double& operator()(int a, int b, int c, int d) { return v_[idx(a, b, c, d)]; }
  double operator()(int a, int b, int c, int d) const { return v_[idx(a, b, c, d)]; }
  const std::vector<double>& data() const { return v_; }

 private:
  std::size_t idx(int a, int b, int c, int d) const {
    return ((static_cast<std::size_t>(a) * n_ + b) * n_ + c) * n_ + d;
  }
  int n_ = 0;
  std::vector<double> v_;
};

}  // namespace geodex
