#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace phrev {

enum class ErrorCode {
  kMissingFile,
  kMalformedRow,
  kNonpositiveValue,
  kEmptyBlock,
  kIndexOutOfRange,
  kShapeMismatch,
  kInvalidCertificate,
  kInvalidMultipliers,
  kDomainViolation,
  kSizeLimit,
  kInvalidArgument,
  kIo,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code and, for file ingestion, the
/// 1-based data row and column where the problem was found.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> row = std::nullopt,
        std::optional<std::size_t> column = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> row() const noexcept { return row_; }
  std::optional<std::size_t> column() const noexcept { return column_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> row_;
  std::optional<std::size_t> column_;
};

}  // namespace phrev
