// Acceptance suite: one PASS / FAIL / SKIP line per criterion. Exit code is
// nonzero when any criterion fails.

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "gradient_oracle.hpp"
#include "metrics_oracle.hpp"
#include "qc/cli.hpp"
#include "qc/corpus.hpp"
#include "qc/error.hpp"
#include "qc/metrics.hpp"
#include "qc/model.hpp"
#include "qc/rng.hpp"
#include "qc/ter.hpp"
#include "synthetic.hpp"
#include "ter_oracle.hpp"

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

enum class Status { pass, fail, skip };

struct Verdict {
  Status status = Status::fail;
  std::string detail;
};

Verdict pass(std::string detail) { return {Status::pass, std::move(detail)}; }
Verdict fail(std::string detail) { return {Status::fail, std::move(detail)}; }
Verdict check(bool ok, std::string detail) { return {ok ? Status::pass : Status::fail, std::move(detail)}; }

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

int qc_run(const std::vector<std::string>& args, std::string* out_text = nullptr) {
  std::ostringstream out, err;
  const int code = qc::cli::run(args, out, err);
  if (out_text) *out_text = out.str();
  if (code != 0) fmt::print("    qc {} -> {}: {}", args.empty() ? "" : args[0], code, err.str());
  return code;
}

class TempDir {
 public:
  explicit TempDir(const std::string& name) : path_(fs::temp_directory_path() / ("qc_accept_" + name)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

// ---------------------------------------------------------------- R@P

Verdict rap_oracle() {
  const auto start = Clock::now();
  qc::Rng rng(20240601);
  const std::vector<double> ts{0.5, 0.8, 0.9, 1.0};
  std::size_t mismatches = 0;
  std::size_t instances = 0;
  for (; instances < 1000; ++instances) {
    const std::size_t n = 1 + rng.below(12);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = static_cast<double>(rng.below(10)) / 10.0;
      labels[i] = rng.bernoulli(0.5) ? 1 : 0;
    }
    labels[rng.below(n)] = 1;
    for (double t : ts) {
      if (qc::metrics::r_at_p(scores, labels, t) != qc::testing::brute_force_r_at_p(scores, labels, t)) ++mismatches;
    }
  }
  const double elapsed = seconds_since(start);
  return check(mismatches == 0 && elapsed < 10.0,
               fmt::format("{} instances x {} thresholds, {} mismatches, {:.2f}s", instances, ts.size(), mismatches, elapsed));
}

Verdict rap_fixed() {
  using qc::metrics::r_at_p;
  const std::vector<double> s1{0.9, 0.8, 0.3, 0.1};
  const std::vector<int> l1{1, 1, 0, 0};
  const std::vector<double> s2{0.9, 0.8, 0.7, 0.4};
  const std::vector<int> l2{1, 1, 0, 1};
  const std::vector<double> s3{0.6, 0.5};
  const std::vector<int> l3{0, 1};
  const double a = r_at_p(s1, l1, 0.9);
  const double b = r_at_p(s2, l2, 0.8);
  const double c = r_at_p(s3, l3, 0.9);
  return check(a == 1.0 && b == 2.0 / 3.0 && c == 0.0, fmt::format("{} / {} / {}", a, b, c));
}

// ---------------------------------------------------------------- TER

qc::Tokens random_sentence(qc::Rng& rng, std::size_t vocab, std::size_t max_len) {
  qc::Tokens out;
  for (std::size_t i = 0, n = 1 + rng.below(max_len); i < n; ++i) out.push_back("w" + std::to_string(rng.below(vocab)));
  return out;
}

// For one hypothesis: optimum of (#moves + Levenshtein) against every
// reference of length 1..max_len over the alphabet, by walking the trie of
// references and carrying one DP row per reachable arrangement.
class ExhaustiveOracle {
 public:
  ExhaustiveOracle(const qc::testing::Symbols& hyp, int alphabet, std::size_t max_len)
      : alphabet_(alphabet), max_len_(max_len), n_(hyp.size()) {
    for (const auto& [arr, moves] : qc::testing::shift_closure(hyp)) {
      arrangements_.push_back(arr);
      moves_.push_back(moves);
    }
  }

  // visit(ref, optimum) for every reference.
  void for_each(const std::function<void(const qc::testing::Symbols&, std::size_t)>& visit) {
    std::vector<std::size_t> rows(arrangements_.size() * (n_ + 1));
    for (std::size_t a = 0; a < arrangements_.size(); ++a)
      for (std::size_t i = 0; i <= n_; ++i) rows[a * (n_ + 1) + i] = i;
    qc::testing::Symbols ref;
    descend(ref, rows, visit);
  }

 private:
  void descend(qc::testing::Symbols& ref, const std::vector<std::size_t>& rows,
               const std::function<void(const qc::testing::Symbols&, std::size_t)>& visit) {
    if (ref.size() == max_len_) return;
    const std::size_t w = n_ + 1;
    std::vector<std::size_t> next(rows.size());
    for (int c = 0; c < alphabet_; ++c) {
      ref.push_back(c);
      std::size_t best = SIZE_MAX;
      for (std::size_t a = 0; a < arrangements_.size(); ++a) {
        const std::size_t* prev = &rows[a * w];
        std::size_t* cur = &next[a * w];
        cur[0] = ref.size();
        for (std::size_t i = 1; i <= n_; ++i) {
          const std::size_t sub = prev[i - 1] + (arrangements_[a][i - 1] == c ? 0u : 1u);
          cur[i] = std::min({prev[i] + 1, cur[i - 1] + 1, sub});
        }
        best = std::min(best, moves_[a] + cur[n_]);
      }
      visit(ref, best);
      descend(ref, next, visit);
      ref.pop_back();
    }
  }

  int alphabet_;
  std::size_t max_len_;
  std::size_t n_;
  std::vector<qc::testing::Symbols> arrangements_;
  std::vector<std::size_t> moves_;
};

Verdict ter_properties() {
  const auto start = Clock::now();
  qc::Rng rng(7);
  std::size_t identity_failures = 0;
  for (int i = 0; i < 200; ++i) {
    const auto x = random_sentence(rng, 12, 20);
    const auto r = qc::ter::ter(x, x);
    if (r.score != 0.0 || r.total_edits() != 0) ++identity_failures;
  }
  std::size_t bound_failures = 0;
  for (int i = 0; i < 500; ++i) {
    const auto hyp = random_sentence(rng, 8, 15);
    const auto ref = random_sentence(rng, 8, 15);
    const double lev = static_cast<double>(qc::ter::edit_distance(hyp, ref).distance) / static_cast<double>(ref.size());
    if (qc::ter::ter(hyp, ref).score > lev) ++bound_failures;
  }

  const qc::Tokens fx_hyp{"d", "e", "a", "b", "c"};
  const qc::Tokens fx_ref{"a", "b", "c", "d", "e"};
  const auto fx = qc::ter::ter(fx_hyp, fx_ref);
  const std::size_t fx_optimum =
      qc::testing::optimal_shift_edits(qc::testing::shift_closure({3, 4, 0, 1, 2}), {0, 1, 2, 3, 4});
  const bool fixture_ok = fx.score == 0.2 && fx.shifts == 1 && fx.insertions + fx.deletions + fx.substitutions == 0 &&
                          fx_optimum == 1 && fx.total_edits() == fx_optimum;

  // Every canonical hypothesis of length 0..6 against every reference of
  // length 1..6 over 4 symbols: oracle optimum <= greedy edits <= Levenshtein.
  std::size_t pairs = 0;
  std::size_t optimal = 0;
  std::size_t below_optimum = 0;
  std::size_t above_levenshtein = 0;
  std::size_t worst_gap = 0;
  for (std::size_t len = 0; len <= 6; ++len) {
    for (const auto& hyp : qc::testing::canonical_sequences(len, 4)) {
      const auto hyp_tokens = qc::testing::to_tokens(hyp);
      ExhaustiveOracle oracle(hyp, 4, 6);
      oracle.for_each([&](const qc::testing::Symbols& ref, std::size_t optimum) {
        const auto ref_tokens = qc::testing::to_tokens(ref);
        const auto r = qc::ter::ter(hyp_tokens, ref_tokens);
        const std::size_t edits = r.total_edits();
        ++pairs;
        if (edits < optimum) ++below_optimum;
        if (edits > qc::testing::levenshtein(hyp, ref)) ++above_levenshtein;
        if (edits == optimum) ++optimal;
        worst_gap = std::max(worst_gap, edits > optimum ? edits - optimum : 0);
      });
    }
  }
  const double elapsed = seconds_since(start);
  const bool ok = identity_failures == 0 && bound_failures == 0 && fixture_ok && below_optimum == 0 &&
                  above_levenshtein == 0 && elapsed < 60.0;
  return check(ok, fmt::format("identity fails {}, bound fails {}, fixture score {} shifts {} (oracle {}); "
                               "exhaustive {} pairs: below-optimum {}, above-Levenshtein {}, "
                               "greedy optimal {:.2f}% (worst gap {}), {:.1f}s",
                               identity_failures, bound_failures, fx.score, fx.shifts, fx_optimum, pairs,
                               below_optimum, above_levenshtein, 100.0 * static_cast<double>(optimal) / pairs, worst_gap,
                               elapsed));
}

// ---------------------------------------------------------------- labels

Verdict label_derivation() {
  qc::QESplit split;
  split.language_pair = "de-en";
  const std::vector<double> hters{0.0, 0.05, 0.0, 1e-10, 0.3, 0.0, 1e-4, 0.9};
  for (std::size_t i = 0; i < hters.size(); ++i) {
    qc::QESample s;
    s.id = i;
    s.source = {"s"};
    s.target = {"t"};
    s.hter = hters[i];
    split.samples.push_back(s);
  }
  // Hand count: 0.0, 0.0, 1e-10, 0.0 are within 1e-9 -> 4 of 8.
  const auto stats = qc::split_stats(qc::derive_labels(split));
  bool ok = stats.count == 8 && stats.good == 4 && stats.good_fraction == 0.5 &&
            qc::format_split_stats(stats) == "8 (50%)";
  // Hand counts per epsilon: 0 -> 3, 1e-9 -> 4, 1e-3 -> 5.
  const std::vector<double> eps{0.0, 1e-9, 1e-3};
  const std::vector<std::size_t> expected{3, 4, 5};
  std::vector<qc::DatasetSplit> labelled;
  for (std::size_t k = 0; k < eps.size(); ++k) {
    labelled.push_back(qc::derive_labels(split, eps[k]));
    ok = ok && qc::split_stats(labelled.back()).good == expected[k];
  }
  std::size_t violations = 0;
  for (std::size_t k = 1; k < eps.size(); ++k)
    for (std::size_t i = 0; i < hters.size(); ++i)
      if (labelled[k - 1].samples[i].label == qc::Label::good && labelled[k].samples[i].label != qc::Label::good)
        ++violations;
  ok = ok && violations == 0;
  return check(ok, fmt::format("good {}/{} ({}), eps sweep {}/{}/{}, monotonicity violations {}", stats.good, stats.count,
                               qc::format_split_stats(stats), qc::split_stats(labelled[0]).good,
                               qc::split_stats(labelled[1]).good, qc::split_stats(labelled[2]).good, violations));
}

// ---------------------------------------------------------------- gradients

Verdict gradient_check() {
  const auto start = Clock::now();
  qc::Rng rng(99);
  const auto layout = qc::testing::small_layout();
  double worst = 0.0;
  std::size_t failures = 0;
  std::size_t parameters = 0;
  for (int m = 0; m < 100; ++m) {
    qc::model::ModelConfig config;
    config.hidden_size = 4;
    config.num_layers = 1 + static_cast<std::size_t>(m % 2);
    const int variant = (m / 2) % 3;
    config.head = variant == 0 ? qc::model::Head::classification : qc::model::Head::regression;
    config.regression_loss = variant == 2 ? qc::model::RegressionLoss::mse : qc::model::RegressionLoss::mae;
    if (variant == 0 && m % 4 == 0) config.positive_weight = 2.5;
    const auto params = qc::testing::random_params(rng, config, layout);
    const auto seq = qc::testing::random_sequence(rng, layout, 2 + rng.below(5));
    double gold = variant == 0 ? static_cast<double>(rng.below(2)) : rng.uniform(0.0, 1.0);
    qc::model::DropoutPlan plan;
    if (m % 5 == 4) plan = qc::model::make_dropout_plan(params, seq.length(), 0.3, rng);
    // MAE has a kink at prediction == gold; keep the gold away from it.
    if (variant == 1) {
      const double pred = qc::model::head_score(params, seq, plan);
      if (std::abs(pred - gold) < 1e-3) gold = pred + 0.1;
    }
    const auto analytic = qc::model::backward(params, seq, gold, plan).weights;
    const auto numeric = qc::testing::numeric_gradient(params, seq, gold, plan);
    const double err = qc::testing::max_relative_error(analytic, numeric);
    parameters += analytic.size();
    worst = std::max(worst, err);
    if (!(err < 1e-4)) ++failures;
  }
  const double elapsed = seconds_since(start);
  return check(failures == 0 && elapsed < 60.0,
               fmt::format("100 models, {} parameters, worst relative error {:.2e}, {} failing, {:.1f}s", parameters,
                           worst, failures, elapsed));
}

// ---------------------------------------------------------------- determinism

void write_triple(const TempDir& dir, const std::string& prefix, std::size_t n, std::uint64_t seed) {
  const std::vector<std::string> src_words{"der", "hund", "die", "katze", "sitzt", "auf", "dem", "tisch", "haus", "rot"};
  const std::vector<std::string> tgt_words{"the", "dog", "the", "cat", "sits", "on", "the", "table", "house", "red"};
  qc::Rng rng(seed);
  std::string src, mt, pe;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> ids;
    for (std::size_t k = 0, len = 2 + rng.below(5); k < len; ++k) ids.push_back(rng.below(src_words.size()));
    qc::Tokens post;
    for (auto id : ids) {
      src += src_words[id] + " ";
      post.push_back(tgt_words[id]);
    }
    auto hyp = post;
    if (rng.bernoulli(0.6)) hyp[rng.below(hyp.size())] = "zz" + std::to_string(rng.below(3));
    src.back() = '\n';
    mt += qc::join_tokens(hyp) + "\n";
    pe += qc::join_tokens(post) + "\n";
  }
  spit(dir / (prefix + ".src"), src);
  spit(dir / (prefix + ".mt"), mt);
  spit(dir / (prefix + ".pe"), pe);
}

Verdict determinism() {
  TempDir dir("determinism");
  for (const std::string s : {"train", "dev"}) {
    write_triple(dir, s, s == "train" ? 120 : 40, s == "train" ? 1 : 2);
    if (qc_run({"convert", "--src", dir / (s + ".src"), "--mt", dir / (s + ".mt"), "--pe", dir / (s + ".pe"), "--out",
                dir / (s + ".tsv"), "--split", s, "--lang", "de-en"}) != 0)
      return fail("convert failed");
  }
  if (qc_run({"train-fe", "--data", dir / "train.tsv", "--out", dir / "fe.json", "--embedding-dim", "4", "--seed", "5"}) != 0)
    return fail("train-fe failed");
  for (const std::string s : {"train", "dev"}) {
    if (qc_run({"extract", "--fe", dir / "fe.json", "--data", dir / (s + ".tsv"), "--out", dir / (s + ".feat")}) != 0)
      return fail("extract failed");
  }
  auto train = [&](const std::string& tag) {
    return qc_run({"train", "--train", dir / "train.tsv", "--train-features", dir / "train.feat", "--dev",
                   dir / "dev.tsv", "--dev-features", dir / "dev.feat", "--model", dir / (tag + ".model"), "--report",
                   dir / (tag + ".report"), "--layers", "2", "--hidden", "6", "--lr", "0.3", "--epochs", "5",
                   "--dropout", "0.2", "--seed", "11"});
  };
  if (train("a") != 0 || train("b") != 0) return fail("train failed");
  const std::string model_a = slurp(dir / "a.model");
  const std::string report_a = slurp(dir / "a.report");
  const bool ok = !model_a.empty() && !report_a.empty() && model_a == slurp(dir / "b.model") &&
                  report_a == slurp(dir / "b.report");
  return check(ok, fmt::format("model {} bytes, report {} bytes, identical: {}", model_a.size(), report_a.size(), ok));
}

// ---------------------------------------------------------------- separable

Verdict separable_end_to_end() {
  const auto start = Clock::now();
  qc::Rng rng(2024);
  const auto train_set = qc::testing::separable_dataset(rng, 2000);
  const auto dev_set = qc::testing::separable_dataset(rng, 500);
  qc::model::ModelConfig config;
  config.hidden_size = 8;
  config.learning_rate = 0.5;
  config.epochs = 30;
  config.seed = 1;
  const auto result = qc::model::train(config, train_set, dev_set);
  const auto scores = qc::model::predict_all(result.params, dev_set);
  const double rap = qc::metrics::r_at_p(scores, dev_set.labels, 0.9);
  std::size_t first = 0;
  while (first < result.report.dev_metric.size() && result.report.dev_metric[first] != 1.0) ++first;
  const double elapsed = seconds_since(start);
  return check(rap == 1.0 && elapsed < 120.0,
               fmt::format("dev R@P_0.9 {} (first reached at epoch {}), {:.1f}s", rap,
                           first < result.report.dev_metric.size() ? std::to_string(first + 1) : "never", elapsed));
}

// ---------------------------------------------------------------- QC vs QE

// hter = max(0, w.f + noise) where the sentence type fixes both the mean
// and the noise scale:
//   A  near-zero mean, tiny noise: always slightly above zero (bad)
//   B  very negative mean, huge noise: mostly exactly zero (good), rare large hter
//   C  clearly bad
// Each token carries a noisy one-hot of the type, the within-type mean
// offset, and noise features.
qc::model::Dataset mixed_noise_dataset(qc::Rng& rng, std::size_t n) {
  qc::model::Dataset data;
  const auto layout = qc::testing::small_layout();
  const std::size_t dim = layout.dim();
  for (std::size_t i = 0; i < n; ++i) {
    const double r = rng.uniform01();
    const int type = r < 0.35 ? 0 : (r < 0.51 ? 1 : 2);
    const double u = rng.uniform(-1.0, 1.0);
    double mean = 0.0;
    double sigma = 0.0;
    if (type == 0) {
      mean = 0.02 + 0.01 * u;
      sigma = 0.002;
    } else if (type == 1) {
      sigma = 4.0;
      mean = -1.645 * sigma;
    } else {
      mean = 0.65 + 0.35 * u;
      sigma = 0.1;
    }
    const double hter = std::max(0.0, mean + sigma * rng.normal());
    auto seq = qc::testing::random_sequence(rng, layout, 3 + rng.below(6));
    seq.sample_id = i;
    for (std::size_t t = 0; t < seq.length(); ++t) {
      double* tok = &seq.values[t * dim];
      for (int k = 0; k < 3; ++k) tok[k] = (k == type ? 1.0 : 0.0) + 0.05 * rng.normal();
      tok[3] = type == 0 ? u : 0.0;
      tok[4] = type == 2 ? u : 0.0;
    }
    data.sequences.push_back(std::move(seq));
    data.hter.push_back(hter);
    data.labels.push_back(hter <= qc::kDefaultGoodEpsilon ? 1 : 0);
  }
  return data;
}

Verdict classification_vs_regression() {
  const auto start = Clock::now();
  int classifier_wins = 0;
  int precision_capped = 0;
  double positive_rate = 0.0;
  std::string rows;
  for (int seed = 0; seed < 10; ++seed) {
    qc::Rng rng(1000 + static_cast<std::uint64_t>(seed));
    const auto train_set = mixed_noise_dataset(rng, 2000);
    const auto dev_set = mixed_noise_dataset(rng, 500);
    const auto test_set = mixed_noise_dataset(rng, 1000);
    for (int y : test_set.labels) positive_rate += y;

    qc::model::ModelConfig clf;
    clf.hidden_size = 8;
    clf.learning_rate = 0.5;
    clf.epochs = 20;
    clf.seed = static_cast<std::uint64_t>(seed);
    const auto clf_model = qc::model::train(clf, train_set, dev_set).params;
    const double clf_rap = qc::metrics::r_at_p(qc::model::predict_all(clf_model, test_set), test_set.labels, 0.9);

    auto reg = clf;
    reg.head = qc::model::Head::regression;
    reg.regression_loss = qc::model::RegressionLoss::mse;
    reg.learning_rate = 0.05;
    const auto reg_model = qc::model::train(reg, train_set, dev_set).params;
    const auto sweep =
        qc::metrics::regression_threshold_sweep(qc::model::predict_all(reg_model, test_set), test_set.labels);
    const double sweep_rap = qc::metrics::r_at_p(sweep.points, 0.9);
    const double max_precision = sweep.max_precision.value_or(0.0);

    classifier_wins += clf_rap >= sweep_rap ? 1 : 0;
    precision_capped += max_precision < 0.9 ? 1 : 0;
    rows += fmt::format(" {:.2f}/{:.2f}/{:.2f}", clf_rap, sweep_rap, max_precision);
  }
  const double elapsed = seconds_since(start);
  return check(classifier_wins >= 8 && precision_capped >= 5 && elapsed < 600.0,
               fmt::format("classifier >= sweep in {}/10, sweep max precision < 0.9 in {}/10, test good {:.1f}%, "
                           "{:.0f}s; per seed clf/sweep R@P_0.9/max precision:{}",
                           classifier_wins, precision_capped, 100.0 * positive_rate / 10000.0, elapsed, rows));
}

// ---------------------------------------------------------------- WMT17

Verdict wmt17_counts() {
  const char* root = std::getenv("QC_WMT17_DIR");
  if (!root || !*root) return {Status::skip, "QC_WMT17_DIR not set"};
  struct Cell {
    std::string lang;
    std::string split;
    double thousands;
    double percent;
  };
  const std::vector<Cell> cells{{"en-de", "train", 23, 14}, {"en-de", "dev", 1, 9},   {"en-de", "test", 2, 15},
                                {"de-en", "train", 25, 42}, {"de-en", "dev", 1, 44},  {"de-en", "test", 2, 15}};
  TempDir dir("wmt17");
  bool ok = true;
  std::string detail;
  for (const auto& cell : cells) {
    const fs::path base = fs::path(root) / cell.lang;
    auto file = [&](const char* ext) { return (base / (cell.split + "." + ext)).string(); };
    std::vector<std::string> args{"convert", "--src", file("src"), "--mt", file("mt"), "--out",
                                  dir / (cell.lang + cell.split + ".tsv"), "--split", cell.split, "--lang", cell.lang};
    if (fs::exists(file("pe"))) args.insert(args.end(), {"--pe", file("pe")});
    if (fs::exists(file("hter"))) args.insert(args.end(), {"--hter", file("hter")});
    std::string out;
    if (qc_run(args, &out) != 0) return fail(fmt::format("convert failed for {} {}", cell.lang, cell.split));
    const auto split = qc::read_qc_tsv(dir / (cell.lang + cell.split + ".tsv"));
    const auto stats = qc::split_stats(split);
    const std::string rendered = qc::format_split_stats(stats);
    const bool count_ok = std::lround(static_cast<double>(stats.count) / 1000.0) == std::lround(cell.thousands);
    const bool percent_ok = std::abs(100.0 * stats.good_fraction - cell.percent) <= 1.0;
    ok = ok && count_ok && percent_ok;
    detail += fmt::format(" {} {} {};", cell.lang, cell.split, rendered);
  }
  return check(ok, detail);
}

// ---------------------------------------------------------------- metric units

Verdict metric_units() {
  using qc::model::LossKind;
  const double ce = qc::model::loss(0.5, 1.0, LossKind::cross_entropy);
  const std::vector<double> x{0.1, 0.4, 0.35, 0.8};
  std::vector<double> neg;
  for (double v : x) neg.push_back(-v);
  const double r_pos = qc::metrics::pearson(x, x);
  const double r_neg = qc::metrics::pearson(x, neg);
  const std::vector<double> pred{0.0, 0.5, 1.0, 0.25};
  const std::vector<double> gold{0.5, 0.5, 0.0, 0.75};
  // |diff| = 0.5, 0, 1, 0.5 -> MAE 0.5; squares 0.25, 0, 1, 0.25 -> RMSE sqrt(0.375).
  const double mae = qc::metrics::mae(pred, gold);
  const double rmse = qc::metrics::rmse(pred, gold);
  const bool ok = std::abs(ce - std::numbers::ln2) <= 1e-9 && std::abs(r_pos - 1.0) <= 1e-12 &&
                  std::abs(r_neg + 1.0) <= 1e-12 && mae == 0.5 && rmse == std::sqrt(0.375);
  return check(ok, fmt::format("CE {:.12f}, pearson {} / {}, MAE {}, RMSE {}", ce, r_pos, r_neg, mae, rmse));
}

// ---------------------------------------------------------------- report golden

Verdict report_golden() {
  const fs::path data = QC_TEST_DATA_DIR;
  TempDir dir("report");
  if (qc_run({"report", "--inputs", (data / "report_fixture_qc.metrics").string(), "--out", dir / "report.md"}) != 0)
    return fail("report failed");
  const std::string got = slurp(dir / "report.md");
  const std::string want = slurp(data / "report_golden.md");
  const bool ok = !want.empty() && got == want && got.find("0.5111") != std::string::npos &&
                  got.find("0.4556") != std::string::npos;
  return check(ok, fmt::format("{} bytes, matches golden: {}", got.size(), got == want));
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"rap_oracle_equivalence", rap_oracle},
      {"rap_fixed_values", rap_fixed},
      {"ter_properties", ter_properties},
      {"label_derivation", label_derivation},
      {"gradient_check", gradient_check},
      {"determinism", determinism},
      {"separable_end_to_end", separable_end_to_end},
      {"classification_vs_regression", classification_vs_regression},
      {"wmt17_split_counts", wmt17_counts},
      {"metric_unit_values", metric_units},
      {"report_golden", report_golden},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = fail(std::string("exception: ") + e.what());
    }
    const char* tag = v.status == Status::pass ? "PASS" : (v.status == Status::skip ? "SKIP" : "FAIL");
    if (v.status == Status::fail) ++failed;
    fmt::print("{} {}: {}\n", tag, name, v.detail);
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
