#pragma once

#include <stdexcept>
#include <string>

namespace qmean {

/// Malformed input data: out-of-range values, bad instance files, bad indices.
class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// A valid input combined with parameters the requested operation cannot honor.
class ConfigurationError : public std::invalid_argument {
 public:
  explicit ConfigurationError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace qmean
