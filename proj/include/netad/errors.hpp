#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace netad {

// Base of every error the library throws. exit_code() is the CLI contract:
// 2 configuration, 3 training divergence, 4 artifact/schema mismatch.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

// A CSV does not match the declared column schema.
class SchemaError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class EmptyInputError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class ShapeError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

// A checkpoint or data file disagrees with what was stored at train time.
class ArtifactMismatch : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

class ContractViolation : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t epoch, std::size_t batch)
      : Error(what + " (epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) + ")"),
        epoch_(epoch),
        batch_(batch) {}

  int exit_code() const noexcept override { return 3; }
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

}  // namespace netad
