#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vradmm {

// A requested computation is outside what this build supports (e.g. the
// dense eigensolver cap, or exact stationarity on a streaming loss).
class CapabilityError : public std::runtime_error {
 public:
  explicit CapabilityError(const std::string& what) : std::runtime_error(what) {}
};

// Hyperparameter derivation cannot proceed (violated assumption, bad knobs).
class HyperparamError : public std::runtime_error {
 public:
  explicit HyperparamError(const std::string& what) : std::runtime_error(what) {}
};

// A solver run produced a non-finite value.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t iteration, double rho, double eta)
      : std::runtime_error(what), iteration(iteration), rho(rho), eta(eta) {}
  std::size_t iteration;
  double rho;
  double eta;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what), line(line) {}
  std::size_t line;
};

}  // namespace vradmm
