#pragma once

#include <stdexcept>
#include <string>

namespace qla {

struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

struct NonSPDError : std::runtime_error {
  explicit NonSPDError(const std::string& msg) : std::runtime_error(msg) {}
};

struct UnsupportedScheme : std::runtime_error {
  explicit UnsupportedScheme(const std::string& msg) : std::runtime_error(msg) {}
};

struct NumericBlowup : std::runtime_error {
  explicit NumericBlowup(const std::string& msg) : std::runtime_error(msg) {}
};

struct UnsupportedDimension : std::runtime_error {
  explicit UnsupportedDimension(const std::string& msg) : std::runtime_error(msg) {}
};

struct DegeneratePosterior : std::runtime_error {
  explicit DegeneratePosterior(const std::string& msg) : std::runtime_error(msg) {}
};

struct SingularInformation : std::runtime_error {
  explicit SingularInformation(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidAlphas : std::runtime_error {
  explicit InvalidAlphas(const std::string& msg) : std::runtime_error(msg) {}
};

struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

struct GridError : std::runtime_error {
  explicit GridError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace qla
