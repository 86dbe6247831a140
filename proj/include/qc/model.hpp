#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qc/features.hpp"
#include "qc/rng.hpp"

namespace qc::model {

using features::SentenceFeatureSequence;

enum class Head { classification, regression };
enum class RegressionLoss { mae, mse };
enum class LossKind { cross_entropy, mae, mse };

std::string_view to_string(Head head);
std::string_view to_string(RegressionLoss loss);
std::string_view to_string(LossKind kind);
Head parse_head(std::string_view text);
RegressionLoss parse_regression_loss(std::string_view text);

struct ModelConfig {
  std::size_t num_layers = 1;
  std::size_t hidden_size = 64;
  double dropout = 0.0;
  double learning_rate = 1e-4;
  Head head = Head::classification;
  RegressionLoss regression_loss = RegressionLoss::mae;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  // Multiplies the loss of positive ("good") samples; 1 = unweighted.
  double positive_weight = 1.0;

  bool operator==(const ModelConfig&) const = default;
};

// Throws ConfigError.
void validate(const ModelConfig& config);
LossKind loss_kind(const ModelConfig& config);

// Offsets of one gated cell inside the flat weight vector. Matrices are
// row-major, hidden x input and hidden x hidden.
struct CellLayout {
  std::size_t input = 0;
  std::size_t wz = 0, uz = 0, bz = 0;
  std::size_t wc = 0, uc = 0, bc = 0;
};

struct ParamTensor {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
};

class ParamLayout {
 public:
  ParamLayout(std::size_t input_dim, std::size_t hidden_size, std::size_t num_layers);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden_size() const { return hidden_; }
  std::size_t num_layers() const { return layers_; }
  // direction 0 = forward, 1 = backward.
  const CellLayout& cell(std::size_t layer, std::size_t direction) const { return cells_[2 * layer + direction]; }
  std::size_t head_weight() const { return head_weight_; }
  std::size_t head_bias() const { return head_bias_; }
  std::size_t size() const { return size_; }
  const std::vector<ParamTensor>& tensors() const { return tensors_; }

 private:
  std::size_t input_dim_, hidden_, layers_;
  std::vector<CellLayout> cells_;
  std::size_t head_weight_ = 0, head_bias_ = 0, size_ = 0;
  std::vector<ParamTensor> tensors_;
};

// Stacked bidirectional gated recurrent layers over per-token features:
//   z = sigmoid(Wz x + Uz h + bz), c = tanh(Wc x + Uc h + bc),
//   h' = (1 - z) * h + z * c, h0 = 0.
// Layer l > 0 reads the per-step concatenation [h_fwd, h_bwd] of layer l-1.
// The aggregate is [final forward state, final backward state] of the top
// layer, followed by a linear head.
struct ModelParams {
  ModelConfig config;
  features::BlockLayout feature_layout;
  std::vector<double> weights;

  std::size_t input_dim() const { return feature_layout.dim(); }
  ParamLayout layout() const { return ParamLayout(input_dim(), config.hidden_size, config.num_layers); }

  bool operator==(const ModelParams&) const = default;
};

ModelParams zero_params(const ModelConfig& config, const features::BlockLayout& feature_layout);
// Every weight uniform(-0.1, 0.1) drawn from rng.
ModelParams init_params(const ModelConfig& config, const features::BlockLayout& feature_layout, Rng& rng);

// Inverted-dropout multipliers (0 or 1/(1-rate)) for one training sample:
// one mask per layer input (length x width, shared by both directions) and
// one over the aggregate. Empty masks disable dropout.
struct DropoutPlan {
  std::vector<std::vector<double>> layer_inputs;
  std::vector<double> aggregate;

  bool empty() const { return layer_inputs.empty() && aggregate.empty(); }
};

DropoutPlan make_dropout_plan(const ModelParams& params, std::size_t length, double rate, Rng& rng);

std::vector<double> forward_aggregate(const ModelParams& params, const SentenceFeatureSequence& seq,
                                      const DropoutPlan& plan = {});
// Pre-activation head output w . aggregate + b.
double head_score(const ModelParams& params, const SentenceFeatureSequence& seq, const DropoutPlan& plan = {});

// Probability of "good", strictly inside (0, 1).
double classify(const ModelParams& params, const SentenceFeatureSequence& seq);
// Predicted TER, clamped at 0.
double regress(const ModelParams& params, const SentenceFeatureSequence& seq);
// classify or regress depending on the head.
double predict(const ModelParams& params, const SentenceFeatureSequence& seq);

double loss(double prediction, double gold, LossKind kind, double positive_weight = 1.0);

struct Gradient {
  double loss = 0.0;
  double prediction = 0.0;  // training-time output: probability, or unclamped regression value
  std::vector<double> weights;
};

// Loss of one sample with the training-time forward pass (no clamp, given masks).
double objective(const ModelParams& params, const SentenceFeatureSequence& seq, double gold,
                 const DropoutPlan& plan = {});
// Exact gradient of objective() with respect to every weight.
Gradient backward(const ModelParams& params, const SentenceFeatureSequence& seq, double gold,
                  const DropoutPlan& plan = {});

void save_model(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_model(const std::filesystem::path& path);
std::string model_to_string(const ModelParams& params);
ModelParams model_from_string(const std::string& text);

// Training and selection.

struct Dataset {
  std::vector<SentenceFeatureSequence> sequences;
  std::vector<int> labels;   // 1 = good
  std::vector<double> hter;  // needed by the regression head

  std::size_t size() const { return sequences.size(); }
  double gold(std::size_t i, Head head) const { return head == Head::classification ? labels[i] : hter[i]; }
};

struct TrainOptions {
  double precision_target = 0.9;
};

struct TrainReport {
  std::vector<double> train_loss;
  std::vector<double> dev_loss;
  // R@P_t for classification, MAE for regression.
  std::vector<double> dev_metric;
  std::size_t best_epoch = 0;

  double best_dev_metric() const { return dev_metric.at(best_epoch); }
  double best_dev_loss() const { return dev_loss.at(best_epoch); }
  bool operator==(const TrainReport&) const = default;
};

std::string report_to_string(const TrainReport& report, const ModelConfig& config);

struct TrainResult {
  ModelParams params;  // at the best dev epoch
  TrainReport report;
};

TrainResult train(const ModelConfig& config, const Dataset& train_set, const Dataset& dev_set,
                  const TrainOptions& options = {});

std::vector<double> predict_all(const ModelParams& params, const Dataset& data);

struct GridRanges {
  std::vector<std::size_t> num_layers{1, 2};
  std::vector<std::size_t> hidden_size{64, 128, 256};
  std::vector<double> dropout{0.0, 0.1, 0.2, 0.3};
  std::vector<double> learning_rate{1e-6, 1e-5, 1e-4};

  std::size_t size() const {
    return num_layers.size() * hidden_size.size() * dropout.size() * learning_rate.size();
  }
};

// Cartesian product in (layers, hidden, dropout, lr) order; configuration i
// gets seed base.seed + i. Throws ConfigError on an empty range.
std::vector<ModelConfig> expand_grid(const GridRanges& ranges, const ModelConfig& base);

struct GridCandidate {
  ModelConfig config;
  TrainReport report;
};

// Classification: highest best-epoch dev R@P_t. Regression: lowest
// best-epoch dev loss. Ties go to smaller hidden size, then fewer layers,
// then lower dropout, then lower learning rate.
std::size_t select_best(const std::vector<GridCandidate>& candidates);

struct GridResult {
  std::vector<GridCandidate> candidates;
  std::size_t best = 0;
  ModelParams best_params;
};

GridResult grid_search(const GridRanges& ranges, const ModelConfig& base, const Dataset& train_set,
                       const Dataset& dev_set, const TrainOptions& options = {});

}  // namespace qc::model
