#pragma once

#include <stdexcept>
#include <string>

namespace biasprobe {

// Base class for every error raised by the library. Subsystems derive their
// own type so callers can tell a bad manifest from a diverging training run.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DatasetError : public Error {
 public:
  using Error::Error;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, int epoch, long step)
      : Error(what), epoch_(epoch), step_(step) {}
  int epoch() const noexcept { return epoch_; }
  long step() const noexcept { return step_; }

 private:
  int epoch_;
  long step_;
};

class InstrumentationError : public Error {
 public:
  using Error::Error;
};

class EvaluationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace biasprobe
