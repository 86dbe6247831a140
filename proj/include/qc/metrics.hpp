#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qc::metrics {

// Labels are 0/1 with 1 the positive ("good") class.
using Labels = std::span<const int>;
using Scores = std::span<const double>;

struct OperatingPoint {
  double threshold = 0.0;
  std::size_t predicted_positive = 0;
  std::size_t true_positive = 0;
  // Undefined when nothing is predicted positive.
  std::optional<double> precision;
  double recall = 0.0;

  bool operator==(const OperatingPoint&) const = default;
};

// Descending thresholds, one per distinct score; prediction is score >= threshold.
struct PRCurve {
  std::vector<OperatingPoint> points;
  std::size_t positives = 0;
  std::size_t total = 0;
};

PRCurve pr_curve(Scores scores, Labels labels);

// Maximum recall over points whose precision is defined and >= t; 0 when none.
double r_at_p(const std::vector<OperatingPoint>& points, double t);
double r_at_p(Scores scores, Labels labels, double t);

struct Confusion {
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  std::size_t false_negative = 0;
  std::size_t true_negative = 0;

  std::size_t total() const { return true_positive + false_positive + false_negative + true_negative; }
};

struct ThresholdMetrics {
  Confusion confusion;
  std::optional<double> precision;
  double recall = 0.0;
  // 0 when precision is undefined or precision + recall == 0.
  double f1 = 0.0;
};

Confusion confusion(Scores scores, Labels labels, double threshold);
ThresholdMetrics at_threshold(Scores scores, Labels labels, double threshold);
double f1(Scores scores, Labels labels, double threshold);

double mae(Scores predictions, Scores golds);
double rmse(Scores predictions, Scores golds);
double pearson(Scores predictions, Scores golds);

struct SweepOptions {
  double lo = 0.0;
  double hi = 0.5;
  double step = 0.01;
};

// Threshold sweep over predicted TER: good iff prediction <= tau, for tau
// on the grid lo, lo + step, ..., hi. Points are in ascending tau.
struct SweepResult {
  std::vector<OperatingPoint> points;
  std::optional<double> max_precision;
  std::size_t positives = 0;
};

SweepResult regression_threshold_sweep(Scores predicted_ter, Labels labels,
                                       const SweepOptions& options = {});

// Flat "key=value" text block, keys in insertion order.
class MetricBlock {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  std::optional<std::string> get(const std::string& key) const;
  double get_number(const std::string& key) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  std::string to_string() const;
  static MetricBlock parse(const std::string& text);

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

// Canonical key for the recall-at-precision entry, e.g. "r_at_p@0.9".
std::string r_at_p_key(double t);
std::string format_threshold(double t);

}  // namespace qc::metrics
