#pragma once

#include <stdexcept>
#include <string>

namespace zads {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid construction parameters (mask specs, schedules, configs).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A solver or sampler produced a non-finite value.
class NumericalBreakdown : public Error {
 public:
  NumericalBreakdown(const std::string& what, int index)
      : Error(what + " (at index " + std::to_string(index) + ")"), index_(index) {}
  int index() const noexcept { return index_; }

 private:
  int index_;
};

class ScheduleInconsistency : public Error {
 public:
  using Error::Error;
};

class InfeasibleSplit : public Error {
 public:
  using Error::Error;
};

class UndefinedLoss : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class PluginTimeout : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  ProtocolError(const std::string& what, long long frame_offset)
      : Error(what + " (frame offset " + std::to_string(frame_offset) + ")"),
        frame_offset_(frame_offset) {}
  long long frame_offset() const noexcept { return frame_offset_; }

 private:
  long long frame_offset_;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace zads
