#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Dense>

namespace gvarfsv {

std::uint64_t splitmix64(std::uint64_t x);

/// Derives an independent substream seed from a master seed and a tag path
/// (e.g. iteration, step, equation). Used so that parallel and serial runs
/// consume identical random streams.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags);

class Rng {
 public:
  explicit Rng(std::uint64_t seed);
  virtual ~Rng() = default;

  virtual double normal();
  // Open interval (0, 1).
  virtual double uniform();
  // Gamma with shape/rate parameterization.
  virtual double gamma(double shape, double rate);

  double beta(double a, double b);
  Eigen::VectorXd normal_vector(Eigen::Index n);

  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace gvarfsv
