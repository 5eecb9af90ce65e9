#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "gvarfsv/errors.hpp"

namespace gvarfsv {

// Dense row-major 3-d array. The last index is contiguous.
class Array3 {
 public:
  Array3() = default;
  Array3(int d0, int d1, int d2, double fill = 0.0)
      : d0_(d0), d1_(d1), d2_(d2), data_(static_cast<std::size_t>(d0) * d1 * d2, fill) {
    require(d0 >= 0 && d1 >= 0 && d2 >= 0, "Array3: negative dimension");
  }

  int dim0() const noexcept { return d0_; }
  int dim1() const noexcept { return d1_; }
  int dim2() const noexcept { return d2_; }
  std::size_t size() const noexcept { return data_.size(); }

  double& operator()(int a, int b, int c) { return data_[index(a, b, c)]; }
  double operator()(int a, int b, int c) const { return data_[index(a, b, c)]; }

  // Contiguous slice over the last index.
  Eigen::Map<Eigen::VectorXd> slice(int a, int b) { return {data_.data() + index(a, b, 0), d2_}; }
  Eigen::Map<const Eigen::VectorXd> slice(int a, int b) const {
    return {data_.data() + index(a, b, 0), d2_};
  }

  const std::vector<double>& data() const noexcept { return data_; }
  std::vector<double>& data() noexcept { return data_; }

  bool all_finite() const;

 private:
  std::size_t index(int a, int b, int c) const noexcept {
    return (static_cast<std::size_t>(a) * d1_ + b) * d2_ + c;
  }

  int d0_ = 0;
  int d1_ = 0;
  int d2_ = 0;
  std::vector<double> data_;
};

}  // namespace gvarfsv
