#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace swag {

enum class ErrorCode {
  FileNotFound,
  MissingResponseColumn,
  NonNumericFeature,
  MissingValue,
  SingleClassResponse,
  MalformedCsv,
  InvalidFoldCount,
  IndexOutOfRange,
  InvalidConfig,
  DegenerateTraining,
  EmptyTraining,
  MulticlassUnsupported,
  WidthMismatch,
  LengthMismatch,
  LabelOutOfRange,
  EmptyInput,
  ImpossibleDimension,
  AllCandidatesFailed,
  EmptyLibrary,
  EmptySelection,
  FormatError,
  UnsupportedVersion,
  MissingAttribute,
  IoError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::MissingResponseColumn: return "MissingResponseColumn";
    case ErrorCode::NonNumericFeature: return "NonNumericFeature";
    case ErrorCode::MissingValue: return "MissingValue";
    case ErrorCode::SingleClassResponse: return "SingleClassResponse";
    case ErrorCode::MalformedCsv: return "MalformedCsv";
    case ErrorCode::InvalidFoldCount: return "InvalidFoldCount";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::DegenerateTraining: return "DegenerateTraining";
    case ErrorCode::EmptyTraining: return "EmptyTraining";
    case ErrorCode::MulticlassUnsupported: return "MulticlassUnsupported";
    case ErrorCode::WidthMismatch: return "WidthMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ImpossibleDimension: return "ImpossibleDimension";
    case ErrorCode::AllCandidatesFailed: return "AllCandidatesFailed";
    case ErrorCode::EmptyLibrary: return "EmptyLibrary";
    case ErrorCode::EmptySelection: return "EmptySelection";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::MissingAttribute: return "MissingAttribute";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Cell-level ingestion failure; row is 1-based over data rows, col is the
/// 0-based column of the raw file.
class CellError : public Error {
 public:
  CellError(ErrorCode code, std::size_t row, std::size_t col,
            const std::string& message)
      : Error(code, message), row_(row), col_(col) {}

  std::size_t row() const noexcept { return row_; }
  std::size_t col() const noexcept { return col_; }

 private:
  std::size_t row_;
  std::size_t col_;
};

/// Configuration failure naming the offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(ErrorCode::InvalidConfig, field + ": " + message),
        field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace swag
