#ifndef NEUCROWD_ERRORS_HPP_
#define NEUCROWD_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace neucrowd {

// Root of every exception thrown by the library. `kind()` is a short stable
// token used in machine-readable error lines.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

// Invalid hyperparameters or network/generator configuration.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

// Dimension mismatch between operands.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error("shape", what) {}
};

// API misuse: empty inputs, stale caches, out-of-range arguments.
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error("usage", what) {}
  UsageError(const std::string& key, const std::string& what)
      : Error("usage", key + ": " + what), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

// Malformed or inconsistent dataset contents.
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error("data", what) {}
};

// Tuplets cannot be built from the given pool.
class ConstructionError : public Error {
 public:
  explicit ConstructionError(const std::string& what)
      : Error("construction", what) {}
};

// Every anchor of a batch has zero assurance.
class AnchorDegeneracyError : public Error {
 public:
  explicit AnchorDegeneracyError(const std::string& what)
      : Error("anchor_degeneracy", what) {}
};

// A classifier cannot be fit (e.g. only one class in the training labels).
class DegenerateFitError : public Error {
 public:
  explicit DegenerateFitError(const std::string& what)
      : Error("degenerate_fit", what) {}
};

// A metric is undefined for the given inputs (e.g. AUC with one class).
class UndefinedMetricError : public Error {
 public:
  explicit UndefinedMetricError(const std::string& what)
      : Error("undefined_metric", what) {}
};

}  // namespace neucrowd

#endif  // NEUCROWD_ERRORS_HPP_
