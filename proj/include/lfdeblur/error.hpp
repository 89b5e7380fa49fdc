#pragma once

#include <stdexcept>
#include <string>

namespace lfdeblur {

// All failures surface as one of these; nothing in the library calls abort().
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

class IndexError : public Error {
 public:
  explicit IndexError(const std::string& msg) : Error(msg) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

class TrainError : public Error {
 public:
  explicit TrainError(const std::string& msg) : Error(msg) {}
};

}  // namespace lfdeblur
