#include "qc/model.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "qc/error.hpp"

namespace qc::model {

using json = nlohmann::json;

std::string_view to_string(Head head) { return head == Head::classification ? "classification" : "regression"; }

std::string_view to_string(RegressionLoss loss) { return loss == RegressionLoss::mae ? "mae" : "mse"; }

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::cross_entropy:
      return "cross_entropy";
    case LossKind::mae:
      return "mae";
    case LossKind::mse:
      return "mse";
  }
  return "?";
}

Head parse_head(std::string_view text) {
  if (text == "classification") return Head::classification;
  if (text == "regression") return Head::regression;
  throw Error(ErrorCode::ConfigError, fmt::format("unknown head '{}'", text));
}

RegressionLoss parse_regression_loss(std::string_view text) {
  if (text == "mae" || text == "MAE") return RegressionLoss::mae;
  if (text == "mse" || text == "MSE") return RegressionLoss::mse;
  throw Error(ErrorCode::ConfigError, fmt::format("unknown regression loss '{}'", text));
}

void validate(const ModelConfig& c) {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); };
  if (c.num_layers < 1) fail("num_layers must be at least 1");
  if (c.hidden_size < 1) fail("hidden_size must be at least 1");
  if (!(c.dropout >= 0.0 && c.dropout < 1.0)) fail(fmt::format("dropout {} outside [0, 1)", c.dropout));
  if (!(c.learning_rate >= 0.0) || !std::isfinite(c.learning_rate)) {
    fail(fmt::format("learning rate {} must be finite and non-negative", c.learning_rate));
  }
  if (c.epochs < 1) fail("epochs must be at least 1");
  if (c.batch_size < 1) fail("batch_size must be at least 1");
  if (!(c.positive_weight > 0.0) || !std::isfinite(c.positive_weight)) fail("positive_weight must be positive");
}

LossKind loss_kind(const ModelConfig& config) {
  if (config.head == Head::classification) return LossKind::cross_entropy;
  return config.regression_loss == RegressionLoss::mae ? LossKind::mae : LossKind::mse;
}

ParamLayout::ParamLayout(std::size_t input_dim, std::size_t hidden_size, std::size_t num_layers)
    : input_dim_(input_dim), hidden_(hidden_size), layers_(num_layers) {
  auto add = [&](std::string name, std::size_t rows, std::size_t cols) {
    tensors_.push_back({std::move(name), size_, rows, cols});
    const std::size_t at = size_;
    size_ += rows * cols;
    return at;
  };
  const std::size_t h = hidden_;
  for (std::size_t l = 0; l < layers_; ++l) {
    const std::size_t in = l == 0 ? input_dim_ : 2 * h;
    for (const char* dir : {"fwd", "bwd"}) {
      const std::string prefix = fmt::format("layer{}.{}.", l, dir);
      CellLayout cell;
      cell.input = in;
      cell.wz = add(prefix + "Wz", h, in);
      cell.uz = add(prefix + "Uz", h, h);
      cell.bz = add(prefix + "bz", h, 1);
      cell.wc = add(prefix + "Wc", h, in);
      cell.uc = add(prefix + "Uc", h, h);
      cell.bc = add(prefix + "bc", h, 1);
      cells_.push_back(cell);
    }
  }
  head_weight_ = add("head.w", 1, 2 * h);
  head_bias_ = add("head.b", 1, 1);
}

ModelParams zero_params(const ModelConfig& config, const features::BlockLayout& feature_layout) {
  validate(config);
  ModelParams p{config, feature_layout, {}};
  p.weights.assign(p.layout().size(), 0.0);
  return p;
}

ModelParams init_params(const ModelConfig& config, const features::BlockLayout& feature_layout, Rng& rng) {
  ModelParams p = zero_params(config, feature_layout);
  for (double& w : p.weights) w = rng.uniform(-0.1, 0.1);
  return p;
}

DropoutPlan make_dropout_plan(const ModelParams& params, std::size_t length, double rate, Rng& rng) {
  DropoutPlan plan;
  if (rate <= 0.0) return plan;
  const double keep = 1.0 / (1.0 - rate);
  auto mask = [&](std::size_t n) {
    std::vector<double> m(n);
    for (double& v : m) v = rng.uniform01() < rate ? 0.0 : keep;
    return m;
  };
  const std::size_t h = params.config.hidden_size;
  for (std::size_t l = 0; l < params.config.num_layers; ++l) {
    plan.layer_inputs.push_back(mask(length * (l == 0 ? params.input_dim() : 2 * h)));
  }
  plan.aggregate = mask(2 * h);
  return plan;
}

namespace {

double sigmoid(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

struct DirectionCache {
  std::vector<double> z, c, h;  // length x hidden, by position
};

struct LayerCache {
  std::size_t width = 0;
  std::vector<double> input;  // after dropout
  DirectionCache dir[2];
};

struct Cache {
  std::size_t length = 0;
  std::vector<LayerCache> layers;
  std::vector<double> aggregate;  // after dropout
  double score = 0.0;
};

void run_direction(const std::vector<double>& w, const CellLayout& cell, std::size_t h,
                   const std::vector<double>& input, std::size_t length, bool reverse, DirectionCache& out) {
  const std::size_t in = cell.input;
  out.z.assign(length * h, 0.0);
  out.c.assign(length * h, 0.0);
  out.h.assign(length * h, 0.0);
  std::vector<double> prev(h, 0.0);
  for (std::size_t s = 0; s < length; ++s) {
    const std::size_t t = reverse ? length - 1 - s : s;
    const double* x = input.data() + t * in;
    for (std::size_t i = 0; i < h; ++i) {
      const double az = w[cell.bz + i] + dot(&w[cell.wz + i * in], x, in) + dot(&w[cell.uz + i * h], prev.data(), h);
      const double ac = w[cell.bc + i] + dot(&w[cell.wc + i * in], x, in) + dot(&w[cell.uc + i * h], prev.data(), h);
      const double z = sigmoid(az);
      const double c = std::tanh(ac);
      out.z[t * h + i] = z;
      out.c[t * h + i] = c;
      out.h[t * h + i] = (1.0 - z) * prev[i] + z * c;
    }
    std::copy_n(out.h.begin() + static_cast<std::ptrdiff_t>(t * h), h, prev.begin());
  }
}

void check_shapes(const ModelParams& params, const SentenceFeatureSequence& seq, const DropoutPlan& plan,
                  const ParamLayout& layout) {
  if (seq.values.empty() || seq.dim() == 0) throw Error(ErrorCode::EmptySentence, "empty feature sequence");
  if (seq.dim() != params.input_dim()) {
    throw Error(ErrorCode::ShapeError,
                fmt::format("feature dim {} does not match model input dim {}", seq.dim(), params.input_dim()));
  }
  if (seq.values.size() % seq.dim() != 0) throw Error(ErrorCode::ShapeError, "ragged feature sequence");
  if (params.weights.size() != layout.size()) {
    throw Error(ErrorCode::ShapeError,
                fmt::format("model has {} weights, layout needs {}", params.weights.size(), layout.size()));
  }
  if (plan.empty()) return;
  const std::size_t h = params.config.hidden_size;
  bool ok = plan.layer_inputs.size() == params.config.num_layers && plan.aggregate.size() == 2 * h;
  for (std::size_t l = 0; ok && l < plan.layer_inputs.size(); ++l) {
    ok = plan.layer_inputs[l].size() == seq.length() * (l == 0 ? params.input_dim() : 2 * h);
  }
  if (!ok) throw Error(ErrorCode::ShapeError, "dropout plan does not match model and sequence");
}

Cache forward_pass(const ModelParams& params, const SentenceFeatureSequence& seq, const DropoutPlan& plan) {
  const ParamLayout layout = params.layout();
  check_shapes(params, seq, plan, layout);
  const std::size_t h = params.config.hidden_size;
  const std::size_t length = seq.length();
  const auto& w = params.weights;

  Cache cache;
  cache.length = length;
  std::vector<double> input = seq.values;
  std::size_t width = seq.dim();
  for (std::size_t l = 0; l < params.config.num_layers; ++l) {
    if (!plan.empty()) {
      for (std::size_t k = 0; k < input.size(); ++k) input[k] *= plan.layer_inputs[l][k];
    }
    LayerCache layer;
    layer.width = width;
    layer.input = std::move(input);
    run_direction(w, layout.cell(l, 0), h, layer.input, length, false, layer.dir[0]);
    run_direction(w, layout.cell(l, 1), h, layer.input, length, true, layer.dir[1]);
    input.assign(length * 2 * h, 0.0);
    for (std::size_t t = 0; t < length; ++t) {
      std::copy_n(&layer.dir[0].h[t * h], h, &input[t * 2 * h]);
      std::copy_n(&layer.dir[1].h[t * h], h, &input[t * 2 * h + h]);
    }
    width = 2 * h;
    cache.layers.push_back(std::move(layer));
  }

  const auto& top = cache.layers.back();
  cache.aggregate.assign(2 * h, 0.0);
  std::copy_n(&top.dir[0].h[(length - 1) * h], h, cache.aggregate.begin());
  std::copy_n(&top.dir[1].h[0], h, cache.aggregate.begin() + static_cast<std::ptrdiff_t>(h));
  if (!plan.empty()) {
    for (std::size_t k = 0; k < 2 * h; ++k) cache.aggregate[k] *= plan.aggregate[k];
  }
  cache.score = w[layout.head_bias()] + dot(&w[layout.head_weight()], cache.aggregate.data(), 2 * h);
  return cache;
}

// Loss as a function of the head score, and its derivative.
std::pair<double, double> score_loss(double score, double gold, const ModelConfig& config) {
  switch (loss_kind(config)) {
    case LossKind::cross_entropy: {
      if (gold != 0.0 && gold != 1.0) throw Error(ErrorCode::DomainError, fmt::format("label {} not in {{0, 1}}", gold));
      const double wp = config.positive_weight * gold;
      const double value = wp * softplus(-score) + (1.0 - gold) * softplus(score);
      const double p = sigmoid(score);
      return {value, wp * (p - 1.0) + (1.0 - gold) * p};
    }
    case LossKind::mae: {
      const double d = score - gold;
      return {std::abs(d), d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)};
    }
    case LossKind::mse: {
      const double d = score - gold;
      return {d * d, 2.0 * d};
    }
  }
  return {0.0, 0.0};
}

void require_head(const ModelParams& params, Head head) {
  if (params.config.head != head) {
    throw Error(ErrorCode::ConfigError, fmt::format("model has a {} head, not {}", to_string(params.config.head),
                                                    to_string(head)));
  }
}

void backprop_direction(const std::vector<double>& w, const CellLayout& cell, std::size_t h,
                        const LayerCache& layer, const DirectionCache& dc, std::size_t length, bool reverse,
                        const std::vector<double>& d_out, std::size_t out_offset, std::vector<double>& grad,
                        std::vector<double>* d_input) {
  const std::size_t in = cell.input;
  std::vector<double> carry(h, 0.0), dh(h), daz(h), dac(h), dprev(h);
  const std::vector<double> zeros(h, 0.0);
  for (std::size_t s = length; s-- > 0;) {
    const std::size_t t = reverse ? length - 1 - s : s;
    const double* hp = s == 0 ? zeros.data() : &dc.h[(reverse ? t + 1 : t - 1) * h];
    const double* x = layer.input.data() + t * in;
    for (std::size_t i = 0; i < h; ++i) {
      dh[i] = d_out[t * 2 * h + out_offset + i] + carry[i];
      const double z = dc.z[t * h + i];
      const double c = dc.c[t * h + i];
      daz[i] = dh[i] * (c - hp[i]) * z * (1.0 - z);
      dac[i] = dh[i] * z * (1.0 - c * c);
      dprev[i] = dh[i] * (1.0 - z);
    }
    for (std::size_t i = 0; i < h; ++i) {
      grad[cell.bz + i] += daz[i];
      grad[cell.bc + i] += dac[i];
      double* gwz = &grad[cell.wz + i * in];
      double* gwc = &grad[cell.wc + i * in];
      for (std::size_t j = 0; j < in; ++j) {
        gwz[j] += daz[i] * x[j];
        gwc[j] += dac[i] * x[j];
      }
      double* guz = &grad[cell.uz + i * h];
      double* guc = &grad[cell.uc + i * h];
      const double* uz = &w[cell.uz + i * h];
      const double* uc = &w[cell.uc + i * h];
      for (std::size_t j = 0; j < h; ++j) {
        guz[j] += daz[i] * hp[j];
        guc[j] += dac[i] * hp[j];
        dprev[j] += uz[j] * daz[i] + uc[j] * dac[i];
      }
      if (d_input) {
        double* dx = &(*d_input)[t * in];
        const double* wz = &w[cell.wz + i * in];
        const double* wc = &w[cell.wc + i * in];
        for (std::size_t j = 0; j < in; ++j) dx[j] += wz[j] * daz[i] + wc[j] * dac[i];
      }
    }
    carry.swap(dprev);
  }
}

}  // namespace

std::vector<double> forward_aggregate(const ModelParams& params, const SentenceFeatureSequence& seq,
                                      const DropoutPlan& plan) {
  return forward_pass(params, seq, plan).aggregate;
}

double head_score(const ModelParams& params, const SentenceFeatureSequence& seq, const DropoutPlan& plan) {
  return forward_pass(params, seq, plan).score;
}

double classify(const ModelParams& params, const SentenceFeatureSequence& seq) {
  require_head(params, Head::classification);
  const double p = sigmoid(head_score(params, seq));
  return std::clamp(p, std::numeric_limits<double>::min(), std::nextafter(1.0, 0.0));
}

double regress(const ModelParams& params, const SentenceFeatureSequence& seq) {
  require_head(params, Head::regression);
  return std::max(0.0, head_score(params, seq));
}

double predict(const ModelParams& params, const SentenceFeatureSequence& seq) {
  return params.config.head == Head::classification ? classify(params, seq) : regress(params, seq);
}

double loss(double prediction, double gold, LossKind kind, double positive_weight) {
  switch (kind) {
    case LossKind::cross_entropy:
      if (!(prediction > 0.0 && prediction < 1.0)) {
        throw Error(ErrorCode::DomainError, fmt::format("cross-entropy needs p in (0, 1), got {}", prediction));
      }
      if (gold != 0.0 && gold != 1.0) throw Error(ErrorCode::DomainError, fmt::format("label {} not in {{0, 1}}", gold));
      return -(positive_weight * gold * std::log(prediction) + (1.0 - gold) * std::log1p(-prediction));
    case LossKind::mae:
      return std::abs(prediction - gold);
    case LossKind::mse:
      return (prediction - gold) * (prediction - gold);
  }
  return 0.0;
}

double objective(const ModelParams& params, const SentenceFeatureSequence& seq, double gold, const DropoutPlan& plan) {
  return score_loss(forward_pass(params, seq, plan).score, gold, params.config).first;
}

Gradient backward(const ModelParams& params, const SentenceFeatureSequence& seq, double gold, const DropoutPlan& plan) {
  const Cache cache = forward_pass(params, seq, plan);
  const ParamLayout layout = params.layout();
  const std::size_t h = params.config.hidden_size;
  const std::size_t length = cache.length;
  const auto& w = params.weights;

  const auto [value, d_score] = score_loss(cache.score, gold, params.config);
  Gradient g;
  g.loss = value;
  g.prediction = params.config.head == Head::classification ? sigmoid(cache.score) : cache.score;
  g.weights.assign(layout.size(), 0.0);

  g.weights[layout.head_bias()] = d_score;
  std::vector<double> d_out(length * 2 * h, 0.0);
  for (std::size_t k = 0; k < 2 * h; ++k) {
    g.weights[layout.head_weight() + k] = d_score * cache.aggregate[k];
    const double d_agg = d_score * w[layout.head_weight() + k] * (plan.empty() ? 1.0 : plan.aggregate[k]);
    if (k < h) {
      d_out[(length - 1) * 2 * h + k] += d_agg;
    } else {
      d_out[k] += d_agg;  // backward final state sits at position 0
    }
  }

  for (std::size_t l = params.config.num_layers; l-- > 0;) {
    const LayerCache& layer = cache.layers[l];
    std::vector<double> d_input;
    if (l > 0) d_input.assign(length * layer.width, 0.0);
    for (std::size_t d = 0; d < 2; ++d) {
      backprop_direction(w, layout.cell(l, d), h, layer, layer.dir[d], length, d == 1, d_out, d * h, g.weights,
                         l > 0 ? &d_input : nullptr);
    }
    if (l == 0) break;
    if (!plan.empty()) {
      for (std::size_t k = 0; k < d_input.size(); ++k) d_input[k] *= plan.layer_inputs[l][k];
    }
    d_out = std::move(d_input);
  }
  return g;
}

namespace {

json config_to_json(const ModelConfig& c) {
  json j;
  j["num_layers"] = c.num_layers;
  j["hidden_size"] = c.hidden_size;
  j["dropout"] = c.dropout;
  j["learning_rate"] = c.learning_rate;
  j["head"] = std::string(to_string(c.head));
  j["regression_loss"] = std::string(to_string(c.regression_loss));
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["seed"] = c.seed;
  j["positive_weight"] = c.positive_weight;
  return j;
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.num_layers = j.at("num_layers").get<std::size_t>();
  c.hidden_size = j.at("hidden_size").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.head = parse_head(j.at("head").get<std::string>());
  c.regression_loss = parse_regression_loss(j.at("regression_loss").get<std::string>());
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.positive_weight = j.at("positive_weight").get<double>();
  return c;
}

}  // namespace

std::string model_to_string(const ModelParams& params) {
  const ParamLayout layout = params.layout();
  if (params.weights.size() != layout.size()) throw Error(ErrorCode::ShapeError, "weights do not match layout");
  json j;
  j["format"] = "qc-model";
  j["version"] = 1;
  j["config"] = config_to_json(params.config);
  j["feature_blocks"] = params.feature_layout.widths;
  json tensors = json::array();
  for (const auto& t : layout.tensors()) {
    tensors.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}});
  }
  j["tensors"] = tensors;
  j["weights"] = params.weights;
  return j.dump(1) + "\n";
}

ModelParams model_from_string(const std::string& text) {
  ModelParams params;
  try {
    const json j = json::parse(text);
    if (j.at("format") != "qc-model") throw Error(ErrorCode::SchemaError, "not a qc model file");
    if (j.at("version") != 1) throw Error(ErrorCode::SchemaError, fmt::format("unsupported model version {}", j.at("version").dump()));
    params.config = config_from_json(j.at("config"));
    validate(params.config);
    params.feature_layout.widths = j.at("feature_blocks").get<std::array<std::size_t, features::kBlockCount>>();
    params.weights = j.at("weights").get<std::vector<double>>();
    const ParamLayout layout = params.layout();
    const auto& tensors = j.at("tensors");
    if (tensors.size() != layout.tensors().size()) throw Error(ErrorCode::ShapeError, "tensor list does not match config");
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      const auto& want = layout.tensors()[i];
      if (tensors[i].at("name") != want.name || tensors[i].at("rows") != want.rows || tensors[i].at("cols") != want.cols) {
        throw Error(ErrorCode::ShapeError, fmt::format("tensor {} has unexpected name or shape", i));
      }
    }
    if (params.weights.size() != layout.size()) {
      throw Error(ErrorCode::ShapeError,
                  fmt::format("model file has {} weights, shapes need {}", params.weights.size(), layout.size()));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, fmt::format("malformed model file: {}", e.what()));
  }
  for (double w : params.weights) {
    if (!std::isfinite(w)) throw Error(ErrorCode::ValueError, "non-finite weight in model file");
  }
  return params;
}

void save_model(const ModelParams& params, const std::filesystem::path& path) {
  const std::string text = model_to_string(params);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write '{}'", path.string()));
  out << text;
}

ModelParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot read '{}'", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return model_from_string(buffer.str());
}

}  // namespace qc::model
