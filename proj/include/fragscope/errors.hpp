#pragma once

#include <stdexcept>
#include <string>

namespace fragscope {

// Each kind maps to a distinct CLI exit code (see tools/fragscope_main.cpp).
enum class ErrorKind {
  kValidation = 1,
  kInsufficientData,
  kUnsupportedArity,
  kPrecondition,
  kConfiguration,
  kParse,
  kFileNotFound,
  kIo,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& what) : Error(ErrorKind::kValidation, what) {}
};

struct InsufficientDataError : Error {
  explicit InsufficientDataError(const std::string& what)
      : Error(ErrorKind::kInsufficientData, what) {}
};

struct UnsupportedArityError : Error {
  explicit UnsupportedArityError(const std::string& what)
      : Error(ErrorKind::kUnsupportedArity, what) {}
};

struct PreconditionError : Error {
  explicit PreconditionError(const std::string& what) : Error(ErrorKind::kPrecondition, what) {}
};

struct ConfigurationError : Error {
  explicit ConfigurationError(const std::string& what)
      : Error(ErrorKind::kConfiguration, what) {}
};

struct ParseError : Error {
  explicit ParseError(const std::string& what) : Error(ErrorKind::kParse, what) {}
};

struct FileNotFoundError : Error {
  explicit FileNotFoundError(const std::string& what) : Error(ErrorKind::kFileNotFound, what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

}  // namespace fragscope
