#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qc {

// A whitespace-free, non-empty text unit.
using Token = std::string;
using Tokens = std::vector<Token>;

struct TokenizerOptions {
  bool lowercase = true;

  bool operator==(const TokenizerOptions&) const = default;
};

// Splits on runs of ASCII whitespace. Lowercasing is ASCII-only; other
// bytes (including UTF-8 multibyte sequences) pass through untouched.
// Throws EmptySentence when no token remains.
Tokens tokenize(std::string_view text, const TokenizerOptions& options = {});

std::string join_tokens(const Tokens& tokens);

enum class Label { bad, good };
enum class SplitName { train, dev, test };

std::string_view to_string(Label label);
std::string_view to_string(SplitName name);
SplitName parse_split_name(std::string_view text);

struct QESample {
  std::size_t id = 0;
  Tokens source;
  Tokens target;
  std::optional<Tokens> post_edit;
  std::optional<double> hter;

  bool operator==(const QESample&) const = default;
};

struct QCSample : QESample {
  Label label = Label::bad;

  bool operator==(const QCSample&) const = default;
};

// Ingested split before labelling.
struct QESplit {
  SplitName name = SplitName::train;
  std::string language_pair;
  std::vector<QESample> samples;

  bool operator==(const QESplit&) const = default;
};

struct DatasetSplit {
  SplitName name = SplitName::train;
  std::string language_pair;
  std::vector<QCSample> samples;

  bool operator==(const DatasetSplit&) const = default;
};

struct SplitStats {
  std::size_t count = 0;
  double good_fraction = 0.0;
  std::size_t good = 0;
};

inline constexpr double kDefaultGoodEpsilon = 1e-9;
inline constexpr double kHterMismatchTolerance = 0.01;

using WarningSink = std::function<void(const std::string&)>;

struct LoadOptions {
  SplitName name = SplitName::train;
  std::string language_pair;
  TokenizerOptions tokenizer;
  // Defaults to printing "warning: ..." on stderr.
  WarningSink on_warning;
};

struct QEPaths {
  std::filesystem::path source;
  std::filesystem::path target;
  std::optional<std::filesystem::path> post_edit;
  std::optional<std::filesystem::path> hter;
};

// Reads line-aligned source / MT / post-edit / HTER files. When the HTER
// file is absent the score is recomputed as TER(mt, post_edit); when both
// are present the file wins and disagreements beyond 0.01 are reported
// through the warning sink.
QESplit load_qe_dataset(const QEPaths& paths, const LoadOptions& options = {});

// good iff hter <= epsilon. The labelled overload re-derives labels and is
// idempotent.
DatasetSplit derive_labels(const QESplit& split, double epsilon = kDefaultGoodEpsilon);
DatasetSplit derive_labels(const DatasetSplit& split, double epsilon = kDefaultGoodEpsilon);

SplitStats split_stats(const DatasetSplit& split);

// Table-style rendering: "25k (42%)". Counts below 1000 print verbatim.
std::string format_split_stats(const SplitStats& stats);

// TSV: header id, source, target, hter, label; hter with 6 decimals.
void write_qc_tsv(const DatasetSplit& split, const std::filesystem::path& path);
std::string qc_tsv_string(const DatasetSplit& split);
DatasetSplit read_qc_tsv(const std::filesystem::path& path,
                         SplitName name = SplitName::train,
                         std::string language_pair = {});
DatasetSplit parse_qc_tsv(std::string_view text, SplitName name = SplitName::train,
                          std::string language_pair = {});

// Shared line reader: splits on '\n', strips a trailing '\r', drops the
// final empty element produced by a terminating newline.
std::vector<std::string> read_lines(const std::filesystem::path& path);
std::vector<std::string> split_lines(std::string_view text);

// Strict decimal parse of the whole field ('.' separator). Throws ParseError.
double parse_decimal(std::string_view field, std::size_t line);

}  // namespace qc
