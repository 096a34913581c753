#ifndef CSL_ERRORS_HPP
#define CSL_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace csl {

// Common base so a CLI layer can catch everything from this library at once.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed expression text; `offset` is the byte position of the problem.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t offset)
      : Error(msg + " (at byte " + std::to_string(offset) + ")"), offset(offset) {}
  std::size_t offset;
};

// log/sqrt of a nonpositive value, division by zero, unbound parameter, ...
class DomainEvalError : public Error {
 public:
  using Error::Error;
};

class MeshError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Eigensolver/factorization breakdowns and non-convergence.
class SolverError : public Error {
 public:
  using Error::Error;
};

// A kernel-dimension query found eigenvalues too close to the tolerance to
// classify; callers must refine, perturb, or change tau.
class TauAmbiguityError : public Error {
 public:
  using Error::Error;
};

}  // namespace csl

#endif
