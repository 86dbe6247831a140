#include "qc/metrics.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qc/corpus.hpp"
#include "qc/error.hpp"

namespace qc::metrics {
namespace {

std::size_t validate(Scores scores, Labels labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorCode::ShapeError,
                fmt::format("{} scores vs {} labels", scores.size(), labels.size()));
  }
  if (scores.empty()) throw Error(ErrorCode::ShapeError, "no scores");
  std::size_t positives = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw Error(ErrorCode::ValueError, fmt::format("label {} is not binary", labels[i]));
    }
    if (!std::isfinite(scores[i])) throw Error(ErrorCode::ValueError, "non-finite score");
    positives += static_cast<std::size_t>(labels[i]);
  }
  if (positives == 0) throw Error(ErrorCode::NoPositives, "evaluation set has no positive labels");
  return positives;
}

void validate_pairs(Scores predictions, Scores golds, std::size_t minimum) {
  if (predictions.size() != golds.size()) {
    throw Error(ErrorCode::ShapeError,
                fmt::format("{} predictions vs {} golds", predictions.size(), golds.size()));
  }
  if (predictions.size() < minimum) {
    throw Error(ErrorCode::ShapeError, fmt::format("need at least {} values", minimum));
  }
}

OperatingPoint make_point(double threshold, std::size_t predicted, std::size_t correct,
                          std::size_t positives) {
  OperatingPoint point;
  point.threshold = threshold;
  point.predicted_positive = predicted;
  point.true_positive = correct;
  if (predicted > 0) {
    point.precision = static_cast<double>(correct) / static_cast<double>(predicted);
  }
  point.recall = static_cast<double>(correct) / static_cast<double>(positives);
  return point;
}

}  // namespace

PRCurve pr_curve(Scores scores, Labels labels) {
  PRCurve curve;
  curve.positives = validate(scores, labels);
  curve.total = scores.size();

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  });

  std::size_t predicted = 0;
  std::size_t correct = 0;
  for (std::size_t k = 0; k < order.size();) {
    const double threshold = scores[order[k]];
    while (k < order.size() && scores[order[k]] == threshold) {
      ++predicted;
      correct += static_cast<std::size_t>(labels[order[k]]);
      ++k;
    }
    curve.points.push_back(make_point(threshold, predicted, correct, curve.positives));
  }
  return curve;
}

double r_at_p(const std::vector<OperatingPoint>& points, double t) {
  if (!(t > 0.0 && t <= 1.0)) {
    throw Error(ErrorCode::ConfigError, fmt::format("precision threshold {} outside (0, 1]", t));
  }
  double best = 0.0;
  for (const auto& point : points) {
    if (point.precision && *point.precision >= t) best = std::max(best, point.recall);
  }
  return best;
}

double r_at_p(Scores scores, Labels labels, double t) { return r_at_p(pr_curve(scores, labels).points, t); }

Confusion confusion(Scores scores, Labels labels, double threshold) {
  validate(scores, labels);
  Confusion c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    const bool actual = labels[i] == 1;
    if (predicted && actual) ++c.true_positive;
    else if (predicted) ++c.false_positive;
    else if (actual) ++c.false_negative;
    else ++c.true_negative;
  }
  return c;
}

ThresholdMetrics at_threshold(Scores scores, Labels labels, double threshold) {
  ThresholdMetrics m;
  m.confusion = confusion(scores, labels, threshold);
  const auto& c = m.confusion;
  const std::size_t predicted = c.true_positive + c.false_positive;
  if (predicted > 0) m.precision = static_cast<double>(c.true_positive) / static_cast<double>(predicted);
  m.recall = static_cast<double>(c.true_positive) /
             static_cast<double>(c.true_positive + c.false_negative);
  if (m.precision && *m.precision + m.recall > 0.0) {
    m.f1 = 2.0 * *m.precision * m.recall / (*m.precision + m.recall);
  }
  return m;
}

double f1(Scores scores, Labels labels, double threshold) {
  return at_threshold(scores, labels, threshold).f1;
}

double mae(Scores predictions, Scores golds) {
  validate_pairs(predictions, golds, 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) sum += std::abs(predictions[i] - golds[i]);
  return sum / static_cast<double>(predictions.size());
}

double rmse(Scores predictions, Scores golds) {
  validate_pairs(predictions, golds, 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double d = predictions[i] - golds[i];
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(predictions.size()));
}

double pearson(Scores predictions, Scores golds) {
  validate_pairs(predictions, golds, 2);
  const auto n = static_cast<double>(predictions.size());
  const double mean_p = std::accumulate(predictions.begin(), predictions.end(), 0.0) / n;
  const double mean_g = std::accumulate(golds.begin(), golds.end(), 0.0) / n;
  double cov = 0.0;
  double var_p = 0.0;
  double var_g = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double dp = predictions[i] - mean_p;
    const double dg = golds[i] - mean_g;
    cov += dp * dg;
    var_p += dp * dp;
    var_g += dg * dg;
  }
  if (var_p == 0.0 || var_g == 0.0) {
    throw Error(ErrorCode::DegenerateVariance, "Pearson correlation needs non-constant inputs");
  }
  return cov / std::sqrt(var_p * var_g);
}

SweepResult regression_threshold_sweep(Scores predicted_ter, Labels labels,
                                       const SweepOptions& options) {
  if (!(options.step > 0.0) || !(options.hi >= options.lo)) {
    throw Error(ErrorCode::ConfigError, "sweep needs step > 0 and hi >= lo");
  }
  SweepResult result;
  result.positives = validate(predicted_ter, labels);
  const auto steps = static_cast<std::size_t>(
      std::floor((options.hi - options.lo) / options.step + 1e-9));
  for (std::size_t k = 0; k <= steps; ++k) {
    const double tau = options.lo + static_cast<double>(k) * options.step;
    std::size_t predicted = 0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predicted_ter.size(); ++i) {
      if (predicted_ter[i] <= tau) {
        ++predicted;
        correct += static_cast<std::size_t>(labels[i]);
      }
    }
    auto point = make_point(tau, predicted, correct, result.positives);
    if (point.precision) {
      result.max_precision = std::max(result.max_precision.value_or(0.0), *point.precision);
    }
    result.points.push_back(point);
  }
  return result;
}

void MetricBlock::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

void MetricBlock::set(const std::string& key, double value) { set(key, fmt::format("{}", value)); }

std::optional<std::string> MetricBlock::get(const std::string& key) const {
  for (const auto& [k, v] : entries_) {
    if (k == key) return v;
  }
  return std::nullopt;
}

double MetricBlock::get_number(const std::string& key) const {
  const auto value = get(key);
  if (!value) throw Error(ErrorCode::SchemaError, fmt::format("metric block lacks '{}'", key));
  return parse_decimal(*value, 0);
}

std::string MetricBlock::to_string() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += fmt::format("{}={}\n", k, v);
  return out;
}

MetricBlock MetricBlock::parse(const std::string& text) {
  MetricBlock block;
  const auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& line = lines[i];
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw Error(ErrorCode::ParseError, "expected key=value", i + 1);
    }
    block.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return block;
}

std::string format_threshold(double t) { return fmt::format("{}", t); }

std::string r_at_p_key(double t) { return "r_at_p@" + format_threshold(t); }

}  // namespace qc::metrics
