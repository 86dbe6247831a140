#include <fmt/format.h>

#include <cmath>
#include <numeric>

#include "json.hpp"
#include "qc/error.hpp"
#include "qc/metrics.hpp"
#include "qc/model.hpp"

namespace qc::model {

namespace {

void check_dataset(const Dataset& data, Head head, std::size_t dim, std::string_view what) {
  if (data.size() == 0) throw Error(ErrorCode::EmptySplit, fmt::format("{} set is empty", what));
  const std::size_t golds = head == Head::classification ? data.labels.size() : data.hter.size();
  if (golds != data.size()) {
    throw Error(ErrorCode::ShapeError, fmt::format("{} set has {} sequences but {} {}", what, data.size(), golds,
                                                   head == Head::classification ? "labels" : "hter values"));
  }
  for (const auto& seq : data.sequences) {
    if (seq.dim() != dim) {
      throw Error(ErrorCode::ShapeError,
                  fmt::format("{} sample {} has feature dim {}, expected {}", what, seq.sample_id, seq.dim(), dim));
    }
  }
}

struct DevScores {
  double loss = 0.0;
  double metric = 0.0;
};

DevScores evaluate_dev(const ModelParams& params, const Dataset& dev, const TrainOptions& options) {
  const auto predictions = predict_all(params, dev);
  const Head head = params.config.head;
  const LossKind kind = loss_kind(params.config);
  double total = 0.0;
  for (std::size_t i = 0; i < dev.size(); ++i) {
    total += loss(predictions[i], dev.gold(i, head), kind, params.config.positive_weight);
  }
  DevScores s;
  s.loss = total / static_cast<double>(dev.size());
  if (!std::isfinite(s.loss)) throw Error(ErrorCode::DivergenceError, "non-finite dev loss");
  s.metric = head == Head::classification ? metrics::r_at_p(predictions, dev.labels, options.precision_target)
                                          : metrics::mae(predictions, dev.hter);
  return s;
}

// True when a should be preferred over b.
bool better_candidate(const GridCandidate& a, const GridCandidate& b) {
  const bool classification = a.config.head == Head::classification;
  const double sa = classification ? a.report.best_dev_metric() : a.report.best_dev_loss();
  const double sb = classification ? b.report.best_dev_metric() : b.report.best_dev_loss();
  if (sa != sb) return classification ? sa > sb : sa < sb;
  if (a.config.hidden_size != b.config.hidden_size) return a.config.hidden_size < b.config.hidden_size;
  if (a.config.num_layers != b.config.num_layers) return a.config.num_layers < b.config.num_layers;
  if (a.config.dropout != b.config.dropout) return a.config.dropout < b.config.dropout;
  return a.config.learning_rate < b.config.learning_rate;
}

}  // namespace

std::vector<double> predict_all(const ModelParams& params, const Dataset& data) {
  std::vector<double> out;
  out.reserve(data.size());
  for (const auto& seq : data.sequences) out.push_back(predict(params, seq));
  return out;
}

TrainResult train(const ModelConfig& config, const Dataset& train_set, const Dataset& dev_set,
                  const TrainOptions& options) {
  validate(config);
  if (train_set.size() == 0) throw Error(ErrorCode::EmptySplit, "train set is empty");
  const features::BlockLayout feature_layout = train_set.sequences.front().layout;
  check_dataset(train_set, config.head, feature_layout.dim(), "train");
  check_dataset(dev_set, config.head, feature_layout.dim(), "dev");

  Rng rng(config.seed);
  ModelParams params = init_params(config, feature_layout, rng);
  TrainResult result{params, {}};

  const std::size_t n = train_set.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> sample_loss(n, 0.0);
  std::vector<double> step(params.weights.size());

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0, batch = 0; start < n; start += config.batch_size, ++batch) {
      const std::size_t end = std::min(n, start + config.batch_size);
      std::fill(step.begin(), step.end(), 0.0);
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        const auto& seq = train_set.sequences[i];
        const DropoutPlan plan = make_dropout_plan(params, seq.length(), config.dropout, rng);
        const Gradient g = backward(params, seq, train_set.gold(i, config.head), plan);
        if (!std::isfinite(g.loss)) {
          throw Error(ErrorCode::DivergenceError,
                      fmt::format("non-finite training loss at epoch {}, batch {}", epoch + 1, batch + 1));
        }
        sample_loss[i] = g.loss;
        for (std::size_t p = 0; p < step.size(); ++p) step[p] += g.weights[p];
      }
      const double scale = config.learning_rate / static_cast<double>(end - start);
      for (std::size_t p = 0; p < step.size(); ++p) params.weights[p] -= scale * step[p];
    }
    result.report.train_loss.push_back(std::accumulate(sample_loss.begin(), sample_loss.end(), 0.0) /
                                       static_cast<double>(n));

    const DevScores dev = evaluate_dev(params, dev_set, options);
    result.report.dev_loss.push_back(dev.loss);
    result.report.dev_metric.push_back(dev.metric);
    const bool improved =
        epoch == 0 || (config.head == Head::classification ? dev.metric > result.report.best_dev_metric()
                                                            : dev.loss < result.report.best_dev_loss());
    if (improved) {
      result.report.best_epoch = epoch;
      result.params = params;
    }
  }
  return result;
}

std::string report_to_string(const TrainReport& report, const ModelConfig& config) {
  nlohmann::json j;
  j["format"] = "qc-train-report";
  j["version"] = 1;
  j["head"] = std::string(to_string(config.head));
  j["dev_metric_name"] = config.head == Head::classification ? "r_at_p" : "mae";
  j["num_layers"] = config.num_layers;
  j["hidden_size"] = config.hidden_size;
  j["dropout"] = config.dropout;
  j["learning_rate"] = config.learning_rate;
  j["seed"] = config.seed;
  j["train_loss"] = report.train_loss;
  j["dev_loss"] = report.dev_loss;
  j["dev_metric"] = report.dev_metric;
  j["best_epoch"] = report.best_epoch;
  return j.dump(1) + "\n";
}

std::vector<ModelConfig> expand_grid(const GridRanges& ranges, const ModelConfig& base) {
  if (ranges.size() == 0) throw Error(ErrorCode::ConfigError, "grid search needs a non-empty range for every parameter");
  std::vector<ModelConfig> configs;
  for (const auto layers : ranges.num_layers) {
    for (const auto hidden : ranges.hidden_size) {
      for (const auto dropout : ranges.dropout) {
        for (const auto lr : ranges.learning_rate) {
          ModelConfig c = base;
          c.num_layers = layers;
          c.hidden_size = hidden;
          c.dropout = dropout;
          c.learning_rate = lr;
          c.seed = base.seed + configs.size();
          validate(c);
          configs.push_back(c);
        }
      }
    }
  }
  return configs;
}

std::size_t select_best(const std::vector<GridCandidate>& candidates) {
  if (candidates.empty()) throw Error(ErrorCode::ConfigError, "no grid candidates to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (better_candidate(candidates[i], candidates[best])) best = i;
  }
  return best;
}

GridResult grid_search(const GridRanges& ranges, const ModelConfig& base, const Dataset& train_set,
                       const Dataset& dev_set, const TrainOptions& options) {
  GridResult result;
  for (const auto& config : expand_grid(ranges, base)) {
    TrainResult trained = train(config, train_set, dev_set, options);
    result.candidates.push_back({config, std::move(trained.report)});
    const std::size_t i = result.candidates.size() - 1;
    if (i == 0 || better_candidate(result.candidates[i], result.candidates[result.best])) {
      result.best = i;
      result.best_params = std::move(trained.params);
    }
  }
  return result;
}

}  // namespace qc::model
