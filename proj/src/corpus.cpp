#include "qc/corpus.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "qc/error.hpp"
#include "qc/ter.hpp"

namespace qc {
namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t begin = 0;
  while (true) {
    const std::size_t tab = line.find('\t', begin);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(begin));
      return fields;
    }
    fields.push_back(line.substr(begin, tab - begin));
    begin = tab + 1;
  }
}

void default_warning(const std::string& message) { std::cerr << "warning: " << message << '\n'; }

}  // namespace

Tokens tokenize(std::string_view text, const TokenizerOptions& options) {
  Tokens tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i == text.size()) break;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    Token token(text.substr(i, j - i));
    if (options.lowercase) {
      for (char& c : token) c = ascii_lower(c);
    }
    tokens.push_back(std::move(token));
    i = j;
  }
  if (tokens.empty()) throw Error(ErrorCode::EmptySentence, "sentence has no tokens");
  return tokens;
}

std::string join_tokens(const Tokens& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

std::string_view to_string(Label label) { return label == Label::good ? "good" : "bad"; }

std::string_view to_string(SplitName name) {
  switch (name) {
    case SplitName::train: return "train";
    case SplitName::dev: return "dev";
    case SplitName::test: return "test";
  }
  return "train";
}

SplitName parse_split_name(std::string_view text) {
  if (text == "train") return SplitName::train;
  if (text == "dev") return SplitName::dev;
  if (text == "test") return SplitName::test;
  throw Error(ErrorCode::ConfigError, fmt::format("unknown split name '{}'", text));
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t begin = 0;
  while (begin < text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(begin, end - begin);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    begin = end + 1;
  }
  return lines;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot open '{}'", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return split_lines(buffer.str());
}

double parse_decimal(std::string_view field, std::size_t line) {
  while (!field.empty() && is_space(field.front())) field.remove_prefix(1);
  while (!field.empty() && is_space(field.back())) field.remove_suffix(1);
  double value = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value, std::chars_format::general);
  if (field.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
    throw Error(ErrorCode::ParseError, fmt::format("not a decimal: '{}'", field), line);
  }
  return value;
}

QESplit load_qe_dataset(const QEPaths& paths, const LoadOptions& options) {
  if (!paths.post_edit && !paths.hter) {
    throw Error(ErrorCode::ConfigError, "need a post-edit file or an HTER file");
  }
  const WarningSink warn = options.on_warning ? options.on_warning : WarningSink(default_warning);

  const auto source = read_lines(paths.source);
  const auto target = read_lines(paths.target);
  std::optional<std::vector<std::string>> post_edit;
  std::optional<std::vector<std::string>> hter;
  if (paths.post_edit) post_edit = read_lines(*paths.post_edit);
  if (paths.hter) hter = read_lines(*paths.hter);

  std::size_t count = source.size();
  std::size_t shortest = count;
  auto note = [&](const std::vector<std::string>& lines) {
    shortest = std::min(shortest, lines.size());
    count = std::max(count, lines.size());
  };
  note(target);
  if (post_edit) note(*post_edit);
  if (hter) note(*hter);
  if (shortest != count) {
    throw Error(ErrorCode::AlignmentError,
                fmt::format("input files disagree in length ({} vs {} lines)", shortest, count),
                shortest + 1);
  }

  QESplit split{options.name, options.language_pair, {}};
  split.samples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t line = i + 1;
    QESample sample;
    sample.id = i;
    try {
      sample.source = tokenize(source[i], options.tokenizer);
      sample.target = tokenize(target[i], options.tokenizer);
      if (post_edit) sample.post_edit = tokenize((*post_edit)[i], options.tokenizer);
    } catch (const Error& e) {
      throw Error(e.code(), e.what(), line);
    }
    if (hter) {
      const double value = parse_decimal((*hter)[i], line);
      if (value < 0.0) throw Error(ErrorCode::ParseError, "negative HTER", line);
      sample.hter = value;
      if (sample.post_edit) {
        const double recomputed = ter::hter(sample.target, *sample.post_edit);
        if (std::abs(recomputed - value) > kHterMismatchTolerance) {
          warn(fmt::format("line {}: HTER file says {:.6f}, recomputed {:.6f}", line, value,
                           recomputed));
        }
      }
    } else {
      sample.hter = ter::hter(sample.target, *sample.post_edit);
    }
    split.samples.push_back(std::move(sample));
  }
  return split;
}

namespace {

template <typename Sample>
QCSample label_one(const Sample& sample, double epsilon) {
  if (!sample.hter) {
    throw Error(ErrorCode::MissingScore, fmt::format("sample {} has no HTER", sample.id));
  }
  QCSample out;
  static_cast<QESample&>(out) = static_cast<const QESample&>(sample);
  out.label = *sample.hter <= epsilon ? Label::good : Label::bad;
  return out;
}

template <typename Split>
DatasetSplit label_all(const Split& split, double epsilon) {
  if (!(epsilon >= 0.0)) throw Error(ErrorCode::ConfigError, "epsilon must be non-negative");
  DatasetSplit out{split.name, split.language_pair, {}};
  out.samples.reserve(split.samples.size());
  for (const auto& sample : split.samples) out.samples.push_back(label_one(sample, epsilon));
  return out;
}

}  // namespace

DatasetSplit derive_labels(const QESplit& split, double epsilon) { return label_all(split, epsilon); }

DatasetSplit derive_labels(const DatasetSplit& split, double epsilon) {
  return label_all(split, epsilon);
}

SplitStats split_stats(const DatasetSplit& split) {
  if (split.samples.empty()) throw Error(ErrorCode::EmptySplit, "split has no samples");
  SplitStats stats;
  stats.count = split.samples.size();
  for (const auto& sample : split.samples) {
    if (sample.label == Label::good) ++stats.good;
  }
  stats.good_fraction = static_cast<double>(stats.good) / static_cast<double>(stats.count);
  return stats;
}

std::string format_split_stats(const SplitStats& stats) {
  const auto percent = static_cast<long long>(std::floor(stats.good_fraction * 100.0 + 0.5));
  if (stats.count >= 1000) {
    const auto thousands = static_cast<long long>(std::floor(stats.count / 1000.0 + 0.5));
    return fmt::format("{}k ({}%)", thousands, percent);
  }
  return fmt::format("{} ({}%)", stats.count, percent);
}

std::string qc_tsv_string(const DatasetSplit& split) {
  std::string out = "id\tsource\ttarget\thter\tlabel\n";
  for (const auto& sample : split.samples) {
    if (!sample.hter) {
      throw Error(ErrorCode::MissingScore, fmt::format("sample {} has no HTER", sample.id));
    }
    out += fmt::format("{}\t{}\t{}\t{:.6f}\t{}\n", sample.id, join_tokens(sample.source),
                       join_tokens(sample.target), *sample.hter, to_string(sample.label));
  }
  return out;
}

void write_qc_tsv(const DatasetSplit& split, const std::filesystem::path& path) {
  const std::string text = qc_tsv_string(split);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out) throw Error(ErrorCode::IoError, fmt::format("write failed for '{}'", path.string()));
}

DatasetSplit parse_qc_tsv(std::string_view text, SplitName name, std::string language_pair) {
  const auto lines = split_lines(text);
  DatasetSplit split{name, std::move(language_pair), {}};
  if (lines.empty()) throw Error(ErrorCode::EmptySplit, "QC TSV is empty");
  if (lines[0] != "id\tsource\ttarget\thter\tlabel") {
    throw Error(ErrorCode::ParseError, "bad QC TSV header", 1);
  }
  for (std::size_t row = 1; row < lines.size(); ++row) {
    const std::size_t line = row + 1;
    const auto fields = split_tabs(lines[row]);
    if (fields.size() != 5) {
      throw Error(ErrorCode::ParseError,
                  fmt::format("expected 5 columns, found {}", fields.size()), line);
    }
    QCSample sample;
    const auto [ptr, ec] =
        std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), sample.id);
    if (fields[0].empty() || ec != std::errc() || ptr != fields[0].data() + fields[0].size()) {
      throw Error(ErrorCode::ParseError, fmt::format("bad id '{}'", fields[0]), line);
    }
    if (sample.id != split.samples.size()) {
      throw Error(ErrorCode::ParseError,
                  fmt::format("id {} out of sequence (expected {})", sample.id, split.samples.size()),
                  line);
    }
    const TokenizerOptions verbatim{.lowercase = false};
    try {
      sample.source = tokenize(fields[1], verbatim);
      sample.target = tokenize(fields[2], verbatim);
    } catch (const Error& e) {
      throw Error(ErrorCode::ParseError, e.what(), line);
    }
    sample.hter = parse_decimal(fields[3], line);
    if (*sample.hter < 0.0) throw Error(ErrorCode::ParseError, "negative HTER", line);
    if (fields[4] == "good") {
      sample.label = Label::good;
    } else if (fields[4] == "bad") {
      sample.label = Label::bad;
    } else {
      throw Error(ErrorCode::ParseError, fmt::format("unknown label '{}'", fields[4]), line);
    }
    split.samples.push_back(std::move(sample));
  }
  if (split.samples.empty()) throw Error(ErrorCode::EmptySplit, "QC TSV has no rows");
  return split;
}

DatasetSplit read_qc_tsv(const std::filesystem::path& path, SplitName name,
                         std::string language_pair) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot open '{}'", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_qc_tsv(buffer.str(), name, std::move(language_pair));
}

}  // namespace qc
