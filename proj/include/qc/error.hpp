#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace qc {

enum class ErrorCode {
  EmptySentence,
  AlignmentError,
  ParseError,
  MissingScore,
  MissingLabel,
  EmptySplit,
  EmptyReference,
  EmptyCorpus,
  IndexError,
  SchemaError,
  ValueError,
  ShapeError,
  ConfigError,
  DomainError,
  DivergenceError,
  NoPositives,
  DegenerateVariance,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Every failure in the toolkit surfaces as a qc::Error. The code is the
// machine-readable part; line is set for errors tied to an input row.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> line = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> line_;
};

}  // namespace qc
