#include "gvarfsv/errors.hpp"

#include <cmath>
#include <iostream>

#include "gvarfsv/array3.hpp"

namespace gvarfsv {

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
  std::string out = "configuration invalid:";
  for (const auto& p : problems) {
    out += "\n  - " + p;
  }
  return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : Error(join_problems(problems)), problems_(std::move(problems)) {}

void require(bool condition, const std::string& message) {
  if (!condition) {
    throw InputError(message);
  }
}

void warn(const std::string& message) { std::clog << "warning: " << message << '\n'; }

bool Array3::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace gvarfsv
