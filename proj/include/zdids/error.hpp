#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace zdids {

// Broad failure classes. The CLI maps them onto process exit codes.
enum class ErrorClass {
  kUsage = 1,    // bad configuration, contract violation by the caller
  kData = 2,     // unreadable or malformed input files
  kNumeric = 3,  // non-finite loss, singular solve
};

class Error : public std::runtime_error {
 public:
  Error(ErrorClass error_class, const std::string& what)
      : std::runtime_error(what), class_(error_class) {}

  ErrorClass error_class() const noexcept { return class_; }
  int exit_code() const noexcept { return static_cast<int>(class_); }

 private:
  ErrorClass class_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorClass::kUsage, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorClass::kData, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorClass::kNumeric, what) {}
};

// --- dataset ---------------------------------------------------------------

class MalformedLine : public DataError {
 public:
  MalformedLine(std::size_t line_no, std::size_t field_count)
      : DataError("line " + std::to_string(line_no) + ": expected 42 fields, got " +
                  std::to_string(field_count)),
        line_no(line_no),
        field_count(field_count) {}
  std::size_t line_no;
  std::size_t field_count;
};

class TypeError : public DataError {
 public:
  TypeError(std::size_t line_no, std::size_t column)
      : DataError("line " + std::to_string(line_no) + ": column " + std::to_string(column) +
                  " is not a finite non-negative number"),
        line_no(line_no),
        column(column) {}
  std::size_t line_no;
  std::size_t column;
};

class UnknownLabel : public DataError {
 public:
  explicit UnknownLabel(const std::string& label)
      : DataError("unknown label '" + label + "'"), label(label) {}
  std::string label;
};

class UnknownCategory : public DataError {
 public:
  UnknownCategory(const std::string& feature, const std::string& value)
      : DataError("feature '" + feature + "': value '" + value + "' not in vocabulary"),
        feature(feature),
        value(value) {}
  std::string feature;
  std::string value;
};

class EmptyInput : public DataError {
 public:
  explicit EmptyInput(const std::string& what = "empty input") : DataError(what) {}
};

// --- preprocess ------------------------------------------------------------

class MissingClass : public UsageError {
 public:
  explicit MissingClass(std::size_t cls)
      : UsageError("class " + std::to_string(cls) + " has no samples"), cls(cls) {}
  std::size_t cls;
};

class DegenerateClass : public UsageError {
 public:
  explicit DegenerateClass(std::size_t cls)
      : UsageError("class " + std::to_string(cls) + " is empty"), cls(cls) {}
  std::size_t cls;
};

class OutOfRange : public UsageError {
 public:
  using UsageError::UsageError;
};

// --- mlp -------------------------------------------------------------------

class BadDims : public UsageError {
 public:
  using UsageError::UsageError;
};

class ShapeMismatch : public UsageError {
 public:
  using UsageError::UsageError;
};

class NonFiniteLoss : public NumericError {
 public:
  explicit NonFiniteLoss(int epoch)
      : NumericError("non-finite loss in epoch " + std::to_string(epoch)), epoch(epoch) {}
  int epoch;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

class CorruptModel : public DataError {
 public:
  explicit CorruptModel(const std::string& reason)
      : DataError("corrupt file: " + reason), reason(reason) {}
  std::string reason;
};

class VersionMismatch : public DataError {
 public:
  using DataError::DataError;
};

// --- metrics ---------------------------------------------------------------

class EmptyMatrix : public UsageError {
 public:
  EmptyMatrix() : UsageError("confusion matrix has no samples") {}
};

class LabelOutOfRange : public UsageError {
 public:
  using UsageError::UsageError;
};

// --- shap ------------------------------------------------------------------

class BadBudget : public UsageError {
 public:
  using UsageError::UsageError;
};

class TooManyFeatures : public UsageError {
 public:
  using UsageError::UsageError;
};

class SingularSystem : public NumericError {
 public:
  explicit SingularSystem(std::size_t cls)
      : NumericError("weighted least-squares system is singular (class " +
                     std::to_string(cls) + ")"),
        cls(cls) {}
  std::size_t cls;
};

}  // namespace zdids
