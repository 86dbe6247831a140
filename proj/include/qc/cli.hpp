#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "qc/metrics.hpp"
#include "qc/model.hpp"

namespace qc::cli {

// Entry point behind the `qc` binary. Returns the process exit code; errors
// print one line "error: <Kind>: <message>" on err.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

inline const std::vector<double> kDefaultThresholds{0.8, 0.9};

// "0.8,0.9" -> {0.8, 0.9}; each in (0, 1], strictly increasing. Throws ConfigError.
std::vector<double> parse_thresholds(std::string_view text);
std::string format_thresholds(const std::vector<double>& thresholds);

// key=value lines; '#' starts a comment line. Throws ConfigError.
std::map<std::string, std::string> read_config(const std::filesystem::path& path);

// Joins a labelled TSV with its feature file by sample id.
model::Dataset load_dataset(const std::filesystem::path& tsv, const std::filesystem::path& features);

struct EvalMeta {
  std::string model;
  std::string language_pair;
  std::string split;
};

// Metric block of an eval run. Classification: R@P at each threshold and
// F1 at 0.5. Regression: MAE, RMSE, Pearson, and R@P from the threshold
// sweep over predicted TER.
metrics::MetricBlock evaluate(const model::ModelParams& params, const model::Dataset& data,
                              const std::vector<double>& thresholds, const EvalMeta& meta);

// Markdown table with columns Model, Lang, Split and one R@P column per
// threshold, values to 4 decimals, rows in input order. Throws ConfigError
// on an empty list or differing threshold sets.
std::string render_report(const std::vector<metrics::MetricBlock>& blocks);

}  // namespace qc::cli
