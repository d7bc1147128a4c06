#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace gentle {

/// Argument outside the domain of an operation (joint limits, crop sizes,
/// empty candidate sets, single-class label sets).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Operation invoked in the wrong simulator phase.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Configuration schema violation. `field` is the dotted JSON path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Tensor shapes incompatible for an operator.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class FormatErrc {
  io = 1,
  bad_magic,
  version_mismatch,
  truncated,
  checksum,
  inconsistent,
};

/// Failure reading or writing a binary container.
class FormatError : public std::runtime_error {
 public:
  FormatError(FormatErrc code, const std::string& what,
              std::optional<std::size_t> sample = std::nullopt)
      : std::runtime_error(what), code_(code), sample_(sample) {}
  FormatErrc code() const { return code_; }
  std::optional<std::size_t> sample_index() const { return sample_; }

 private:
  FormatErrc code_;
  std::optional<std::size_t> sample_;
};

/// Training diverged.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(int epoch, int batch, double lr, const std::string& what)
      : std::runtime_error(what + " (epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch) + ", lr " + std::to_string(lr) + ")"),
        epoch_(epoch),
        batch_(batch),
        lr_(lr) {}
  int epoch() const { return epoch_; }
  int batch() const { return batch_; }
  double lr() const { return lr_; }

 private:
  int epoch_;
  int batch_;
  double lr_;
};

inline const char* to_string(FormatErrc code) {
  switch (code) {
    case FormatErrc::io: return "io";
    case FormatErrc::bad_magic: return "bad_magic";
    case FormatErrc::version_mismatch: return "version_mismatch";
    case FormatErrc::truncated: return "truncated";
    case FormatErrc::checksum: return "checksum";
    case FormatErrc::inconsistent: return "inconsistent";
  }
  return "unknown";
}

}  // namespace gentle
