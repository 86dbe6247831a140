#include "qc/error.hpp"

namespace qc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptySentence: return "EmptySentence";
    case ErrorCode::AlignmentError: return "AlignmentError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingScore: return "MissingScore";
    case ErrorCode::MissingLabel: return "MissingLabel";
    case ErrorCode::EmptySplit: return "EmptySplit";
    case ErrorCode::EmptyReference: return "EmptyReference";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::IndexError: return "IndexError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::ValueError: return "ValueError";
    case ErrorCode::ShapeError: return "ShapeError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::DivergenceError: return "DivergenceError";
    case ErrorCode::NoPositives: return "NoPositives";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::IoError: return "IoError";
  }
  return "Error";
}

namespace {

std::string with_line(const std::string& message, std::optional<std::size_t> line) {
  if (!line) return message;
  return "line " + std::to_string(*line) + ": " + message;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message, std::optional<std::size_t> line)
    : std::runtime_error(with_line(message, line)), code_(code), line_(line) {}

}  // namespace qc
