#include "qc/cli.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "CLI11.hpp"
#include "qc/corpus.hpp"
#include "qc/error.hpp"
#include "qc/features.hpp"
#include "qc/ter.hpp"

namespace qc::cli {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto at = text.find(sep, start);
    parts.push_back(text.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start));
    if (at == std::string_view::npos) break;
    start = at + 1;
  }
  return parts;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write '{}'", path.string()));
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot read '{}'", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

double config_number(std::string_view text, std::string_view what) {
  try {
    return parse_decimal(text, 0);
  } catch (const Error&) {
    throw Error(ErrorCode::ConfigError, fmt::format("bad {} value '{}'", what, text));
  }
}

std::vector<double> number_list(std::string_view text, std::string_view what) {
  std::vector<double> values;
  for (auto part : split(text, ',')) values.push_back(config_number(trim(part), what));
  return values;
}

std::vector<std::size_t> count_list(std::string_view text, std::string_view what) {
  std::vector<std::size_t> values;
  for (auto part : split(text, ',')) {
    part = trim(part);
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc() || ptr != part.data() + part.size() || part.empty()) {
      throw Error(ErrorCode::ConfigError, fmt::format("bad {} value '{}'", what, part));
    }
    values.push_back(v);
  }
  return values;
}

std::vector<std::pair<Tokens, Tokens>> read_parallel(const fs::path& src, const fs::path& tgt,
                                                     const TokenizerOptions& tokenizer) {
  const auto source = read_lines(src);
  const auto target = read_lines(tgt);
  if (source.size() != target.size()) {
    throw Error(ErrorCode::AlignmentError,
                fmt::format("'{}' has {} lines, '{}' has {}", src.string(), source.size(), tgt.string(), target.size()),
                std::min(source.size(), target.size()) + 1);
  }
  std::vector<std::pair<Tokens, Tokens>> pairs;
  for (std::size_t i = 0; i < source.size(); ++i) {
    try {
      pairs.emplace_back(tokenize(source[i], tokenizer), tokenize(target[i], tokenizer));
    } catch (const Error& e) {
      throw Error(e.code(), e.what(), i + 1);
    }
  }
  return pairs;
}

std::string scores_to_string(const model::Dataset& data, const std::vector<double>& scores) {
  std::string text = "id\tscore\n";
  for (std::size_t i = 0; i < scores.size(); ++i) text += fmt::format("{}\t{}\n", data.sequences[i].sample_id, scores[i]);
  return text;
}

std::unordered_map<std::size_t, double> read_scores(const fs::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || lines[0] != "id\tscore") {
    throw Error(ErrorCode::ParseError, fmt::format("'{}' lacks the 'id<TAB>score' header", path.string()), 1);
  }
  std::unordered_map<std::size_t, double> scores;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split(lines[i], '\t');
    if (fields.size() != 2) throw Error(ErrorCode::ParseError, "expected 2 columns", i + 1);
    std::size_t id = 0;
    const auto [ptr, ec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), id);
    if (ec != std::errc() || ptr != fields[0].data() + fields[0].size()) {
      throw Error(ErrorCode::ParseError, fmt::format("bad sample id '{}'", fields[0]), i + 1);
    }
    scores[id] = parse_decimal(fields[1], i + 1);
  }
  return scores;
}

std::string undefined_or(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : "undefined"; }

void require(CLI::App& sub, std::initializer_list<const char*> names) {
  for (const char* name : names) {
    if (sub.get_option(name)->count() == 0) {
      throw Error(ErrorCode::ConfigError, fmt::format("{} requires {}", sub.get_name(), name));
    }
  }
}

// Fills options not given on the command line from the key=value file.
void apply_config(CLI::App& sub, const std::string& path) {
  for (const auto& [key, value] : read_config(path)) {
    CLI::Option* opt = key == "config" ? nullptr : sub.get_option_no_throw("--" + key);
    if (opt == nullptr) {
      throw Error(ErrorCode::ConfigError, fmt::format("unknown key '{}' for '{}'", key, sub.get_name()));
    }
    if (opt->count() > 0) continue;
    opt->add_result(value);
    opt->run_callback();
  }
}

struct ModelArgs {
  std::string head = "classification";
  std::string loss = "mae";
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double positive_weight = 1.0;
  double precision = 0.9;
  std::uint64_t seed = 0;
  // train
  std::size_t layers = 1;
  std::size_t hidden = 64;
  double dropout = 0.0;
  double lr = 1e-4;
  // grid
  std::string layer_list = "1,2";
  std::string hidden_list = "64,128,256";
  std::string dropout_list = "0,0.1,0.2,0.3";
  std::string lr_list = "1e-6,1e-5,1e-4";

  std::string train, train_features, dev, dev_features, model, report;

  model::ModelConfig config() const {
    model::ModelConfig c;
    c.num_layers = layers;
    c.hidden_size = hidden;
    c.dropout = dropout;
    c.learning_rate = lr;
    c.head = model::parse_head(head);
    c.regression_loss = model::parse_regression_loss(loss);
    c.epochs = epochs;
    c.batch_size = batch_size;
    c.seed = seed;
    c.positive_weight = positive_weight;
    return c;
  }
};

void add_model_options(CLI::App& sub, ModelArgs& a, bool grid) {
  sub.add_option("--train", a.train, "Labelled training TSV");
  sub.add_option("--train-features", a.train_features, "Feature file for --train");
  sub.add_option("--dev", a.dev, "Labelled dev TSV");
  sub.add_option("--dev-features", a.dev_features, "Feature file for --dev");
  sub.add_option("--model", a.model, "Output model file");
  sub.add_option("--report", a.report, grid ? "Output grid table (TSV)" : "Output training report (JSON)");
  sub.add_option("--head", a.head, "classification or regression")->capture_default_str();
  sub.add_option("--loss", a.loss, "Regression loss: mae or mse")->capture_default_str();
  sub.add_option("--epochs", a.epochs)->capture_default_str();
  sub.add_option("--batch-size", a.batch_size)->capture_default_str();
  sub.add_option("--positive-weight", a.positive_weight, "Loss weight of good samples")->capture_default_str();
  sub.add_option("--precision", a.precision, "Precision target t for dev R@P_t")->capture_default_str();
  sub.add_option("--seed", a.seed)->capture_default_str();
  if (grid) {
    sub.add_option("--layers", a.layer_list, "Comma-separated layer counts")->capture_default_str();
    sub.add_option("--hidden", a.hidden_list, "Comma-separated hidden sizes")->capture_default_str();
    sub.add_option("--dropout", a.dropout_list, "Comma-separated dropout rates")->capture_default_str();
    sub.add_option("--lr", a.lr_list, "Comma-separated learning rates")->capture_default_str();
  } else {
    sub.add_option("--layers", a.layers)->capture_default_str();
    sub.add_option("--hidden", a.hidden)->capture_default_str();
    sub.add_option("--dropout", a.dropout)->capture_default_str();
    sub.add_option("--lr", a.lr)->capture_default_str();
  }
}

std::string grid_table(const model::GridResult& result) {
  std::string text = "index\tnum_layers\thidden_size\tdropout\tlearning_rate\tseed\tbest_epoch\tdev_metric\tdev_loss\tselected\n";
  for (std::size_t i = 0; i < result.candidates.size(); ++i) {
    const auto& c = result.candidates[i];
    text += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", i, c.config.num_layers, c.config.hidden_size,
                        c.config.dropout, c.config.learning_rate, c.config.seed, c.report.best_epoch,
                        c.report.best_dev_metric(), c.report.best_dev_loss(), i == result.best ? 1 : 0);
  }
  return text;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Machine-translation quality classification toolkit", "qc"};
  app.require_subcommand(1);
  std::string config_path;

  auto* convert = app.add_subcommand("convert", "Build a labelled TSV from src/mt/pe/hter files");
  struct {
    std::string src, mt, pe, hter, out, split = "train", lang;
    double epsilon = kDefaultGoodEpsilon;
    bool lowercase = true;
  } cv;
  convert->add_option("--src", cv.src, "Source sentences");
  convert->add_option("--mt", cv.mt, "Machine translations");
  convert->add_option("--pe", cv.pe, "Post-edits (HTER is recomputed when --hter is absent)");
  convert->add_option("--hter", cv.hter, "HTER scores, one per line");
  convert->add_option("--out", cv.out, "Output TSV");
  convert->add_option("--split", cv.split, "train, dev or test")->capture_default_str();
  convert->add_option("--lang", cv.lang, "Language pair, e.g. de-en");
  convert->add_option("--epsilon", cv.epsilon, "good iff hter <= epsilon")->capture_default_str();
  convert->add_option("--lowercase", cv.lowercase)->capture_default_str();

  auto* ter_cmd = app.add_subcommand("ter", "Score line-aligned hypothesis/reference files");
  struct {
    std::string hyp, ref, out;
    std::size_t max_shift = ter::TEROptions{}.max_shift_length;
    bool lowercase = true;
  } tr;
  ter_cmd->add_option("--hyp", tr.hyp, "Hypotheses (MT output)");
  ter_cmd->add_option("--ref", tr.ref, "References (post-edits)");
  ter_cmd->add_option("--out", tr.out, "Per-line table (default: stdout)");
  ter_cmd->add_option("--max-shift", tr.max_shift, "Longest shiftable block")->capture_default_str();
  ter_cmd->add_option("--lowercase", tr.lowercase)->capture_default_str();

  auto* train_fe = app.add_subcommand("train-fe", "Train the feature extractor on parallel data");
  struct {
    std::string data, src, tgt, out;
    std::size_t order = features::kDefaultOrder;
    double alpha = features::kDefaultAlpha;
    std::size_t embedding_dim = features::kDefaultEmbeddingDim;
    std::uint64_t seed = 0;
    bool lowercase = true;
  } fe;
  train_fe->add_option("--data", fe.data, "TSV whose source/target columns form the parallel corpus");
  train_fe->add_option("--src", fe.src, "Plain-text source side (with --tgt)");
  train_fe->add_option("--tgt", fe.tgt, "Plain-text target side (with --src)");
  train_fe->add_option("--out", fe.out, "Output extractor file");
  train_fe->add_option("--order", fe.order, "n-gram order")->capture_default_str();
  train_fe->add_option("--alpha", fe.alpha, "Add-alpha smoothing")->capture_default_str();
  train_fe->add_option("--embedding-dim", fe.embedding_dim)->capture_default_str();
  train_fe->add_option("--seed", fe.seed)->capture_default_str();
  train_fe->add_option("--lowercase", fe.lowercase, "Tokenizer setting for --src/--tgt")->capture_default_str();

  auto* extract = app.add_subcommand("extract", "Write per-token feature sequences for a TSV");
  struct {
    std::string fe, data, out;
  } ex;
  extract->add_option("--fe", ex.fe, "Extractor file from train-fe");
  extract->add_option("--data", ex.data, "Labelled TSV");
  extract->add_option("--out", ex.out, "Output feature file");

  auto* train_cmd = app.add_subcommand("train", "Train one classifier or regressor");
  ModelArgs ta;
  add_model_options(*train_cmd, ta, false);

  auto* grid = app.add_subcommand("grid", "Grid search over layers, hidden size, dropout and learning rate");
  ModelArgs ga;
  add_model_options(*grid, ga, true);

  auto* eval = app.add_subcommand("eval", "Score a TSV with a model and write a metric block");
  struct {
    std::string data, features, model, thresholds = "0.8,0.9", scores, out, name, lang, split = "test";
    std::uint64_t seed = 0;
  } ev;
  eval->add_option("--data", ev.data, "Labelled TSV");
  eval->add_option("--features", ev.features, "Feature file for --data");
  eval->add_option("--model", ev.model, "Model file");
  eval->add_option("--thresholds", ev.thresholds, "Precision targets")->capture_default_str();
  eval->add_option("--scores", ev.scores, "Output per-sample scores");
  eval->add_option("--out", ev.out, "Output metric block (also printed)");
  eval->add_option("--name", ev.name, "Model name in the block (default: model file stem)");
  eval->add_option("--lang", ev.lang, "Language pair in the block");
  eval->add_option("--split", ev.split, "Split name in the block")->capture_default_str();
  eval->add_option("--seed", ev.seed, "Accepted for uniformity; evaluation is deterministic");

  auto* sweep = app.add_subcommand("sweep", "Regression baseline: threshold sweep over predicted TER");
  struct {
    std::string data, scores, features, model, thresholds = "0.8,0.9", table, out;
    double lo = 0.0, hi = 0.5, step = 0.01;
  } sw;
  sweep->add_option("--data", sw.data, "Labelled TSV");
  sweep->add_option("--scores", sw.scores, "Predicted TER per sample (id<TAB>score)");
  sweep->add_option("--features", sw.features, "Feature file (with --model)");
  sweep->add_option("--model", sw.model, "Regression model (with --features)");
  sweep->add_option("--thresholds", sw.thresholds, "Precision targets")->capture_default_str();
  sweep->add_option("--lo", sw.lo)->capture_default_str();
  sweep->add_option("--hi", sw.hi)->capture_default_str();
  sweep->add_option("--step", sw.step)->capture_default_str();
  sweep->add_option("--table", sw.table, "Output PR table (default: stdout)");
  sweep->add_option("--out", sw.out, "Output metric block (also printed)");

  auto* report = app.add_subcommand("report", "Tabulate eval metric blocks");
  struct {
    std::vector<std::string> inputs;
    std::string out;
  } rp;
  report->add_option("--inputs", rp.inputs, "Metric block files, one row each");
  report->add_option("--out", rp.out, "Output table (also printed)");

  for (auto* sub : {convert, ter_cmd, train_fe, extract, train_cmd, grid, eval, sweep, report})
    sub->add_option("--config", config_path, "key=value file mirroring the flags");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: UsageError: " << msg << "\n";
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  if (!config_path.empty()) apply_config(*sub, config_path);

  if (sub == convert) {
    require(*sub, {"--src", "--mt", "--out"});
    if (cv.pe.empty() && cv.hter.empty()) throw Error(ErrorCode::ConfigError, "convert needs --pe or --hter");
    QEPaths paths{cv.src, cv.mt, std::nullopt, std::nullopt};
    if (!cv.pe.empty()) paths.post_edit = cv.pe;
    if (!cv.hter.empty()) paths.hter = cv.hter;
    LoadOptions options;
    options.name = parse_split_name(cv.split);
    options.language_pair = cv.lang;
    options.tokenizer.lowercase = cv.lowercase;
    options.on_warning = [&err](const std::string& msg) { err << "warning: " << msg << "\n"; };
    const auto labelled = derive_labels(load_qe_dataset(paths, options), cv.epsilon);
    write_qc_tsv(labelled, cv.out);
    const auto stats = split_stats(labelled);
    out << fmt::format("{}\t{}\t{}\tcount={}\tgood={}\n", cv.lang.empty() ? "-" : cv.lang, cv.split,
                       format_split_stats(stats), stats.count, stats.good);
    return 0;
  }

  if (sub == ter_cmd) {
    require(*sub, {"--hyp", "--ref"});
    const auto pairs = read_parallel(tr.hyp, tr.ref, {.lowercase = tr.lowercase});
    std::string table = "line\tscore\tinsertions\tdeletions\tsubstitutions\tshifts\tref_len\n";
    double sum = 0.0;
    std::size_t edits = 0, ref_words = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto r = ter::ter(pairs[i].first, pairs[i].second, {.max_shift_length = tr.max_shift});
      table += fmt::format("{}\t{:.6f}\t{}\t{}\t{}\t{}\t{}\n", i + 1, r.score, r.insertions, r.deletions,
                           r.substitutions, r.shifts, r.ref_len);
      sum += r.score;
      edits += r.total_edits();
      ref_words += r.ref_len;
    }
    if (tr.out.empty()) {
      out << table;
    } else {
      write_text(tr.out, table);
    }
    out << fmt::format("pairs={}\tmean_ter={:.6f}\tcorpus_ter={:.6f}\n", pairs.size(),
                       pairs.empty() ? 0.0 : sum / static_cast<double>(pairs.size()),
                       ref_words == 0 ? 0.0 : static_cast<double>(edits) / static_cast<double>(ref_words));
    return 0;
  }

  if (sub == train_fe) {
    require(*sub, {"--out"});
    features::ParallelCorpus corpus;
    if (!fe.data.empty()) {
      for (auto& s : read_qc_tsv(fe.data).samples) corpus.emplace_back(std::move(s.source), std::move(s.target));
    } else if (!fe.src.empty() && !fe.tgt.empty()) {
      corpus = read_parallel(fe.src, fe.tgt, {.lowercase = fe.lowercase});
    } else {
      throw Error(ErrorCode::ConfigError, "train-fe needs --data or both --src and --tgt");
    }
    features::ExtractorConfig config;
    config.order = fe.order;
    config.alpha = fe.alpha;
    config.embedding_dim = fe.embedding_dim;
    config.seed = fe.seed;
    config.tokenizer.lowercase = fe.lowercase;
    const auto extractor = features::train_feature_extractor(corpus, config);
    features::save_extractor(extractor, fe.out);
    out << fmt::format("pairs={}\tsource_vocab={}\ttarget_vocab={}\tdim={}\n", corpus.size(),
                       extractor.lexical.source_vocabulary().tokens().size(),
                       extractor.forward.vocabulary().tokens().size(), extractor.layout().dim());
    return 0;
  }

  if (sub == extract) {
    require(*sub, {"--fe", "--data", "--out"});
    const auto extractor = features::load_extractor(ex.fe);
    const auto split_data = read_qc_tsv(ex.data);
    features::FeatureFile file{extractor.layout(), {}};
    for (const auto& s : split_data.samples) file.sequences.push_back(features::extract_features(s, extractor));
    features::export_features(file, ex.out);
    out << fmt::format("sequences={}\tdim={}\n", file.sequences.size(), file.layout.dim());
    return 0;
  }

  if (sub == train_cmd) {
    require(*sub, {"--train", "--train-features", "--dev", "--dev-features", "--model"});
    const auto config = ta.config();
    const auto train_set = load_dataset(ta.train, ta.train_features);
    const auto dev_set = load_dataset(ta.dev, ta.dev_features);
    const auto result = model::train(config, train_set, dev_set, {ta.precision});
    model::save_model(result.params, ta.model);
    if (!ta.report.empty()) write_text(ta.report, model::report_to_string(result.report, config));
    out << fmt::format("best_epoch={}\tdev_{}={}\tdev_loss={}\n", result.report.best_epoch,
                       config.head == model::Head::classification ? metrics::r_at_p_key(ta.precision) : "mae",
                       result.report.best_dev_metric(), result.report.best_dev_loss());
    return 0;
  }

  if (sub == grid) {
    require(*sub, {"--train", "--train-features", "--dev", "--dev-features", "--model"});
    model::GridRanges ranges{count_list(ga.layer_list, "--layers"), count_list(ga.hidden_list, "--hidden"),
                             number_list(ga.dropout_list, "--dropout"), number_list(ga.lr_list, "--lr")};
    const auto train_set = load_dataset(ga.train, ga.train_features);
    const auto dev_set = load_dataset(ga.dev, ga.dev_features);
    const auto result = model::grid_search(ranges, ga.config(), train_set, dev_set, {ga.precision});
    model::save_model(result.best_params, ga.model);
    const std::string table = grid_table(result);
    if (!ga.report.empty()) write_text(ga.report, table);
    const auto& best = result.candidates[result.best];
    out << fmt::format("configurations={}\tselected={}\tnum_layers={}\thidden_size={}\tdropout={}\tlearning_rate={}\t"
                       "dev_metric={}\n",
                       result.candidates.size(), result.best, best.config.num_layers, best.config.hidden_size,
                       best.config.dropout, best.config.learning_rate, best.report.best_dev_metric());
    return 0;
  }

  if (sub == eval) {
    require(*sub, {"--data", "--features", "--model"});
    const auto thresholds = parse_thresholds(ev.thresholds);
    const auto params = model::load_model(ev.model);
    const auto data = load_dataset(ev.data, ev.features);
    const EvalMeta meta{ev.name.empty() ? fs::path(ev.model).stem().string() : ev.name, ev.lang, ev.split};
    const auto block = evaluate(params, data, thresholds, meta);
    if (!ev.scores.empty()) write_text(ev.scores, scores_to_string(data, model::predict_all(params, data)));
    const std::string text = block.to_string();
    if (!ev.out.empty()) write_text(ev.out, text);
    out << text;
    return 0;
  }

  if (sub == sweep) {
    require(*sub, {"--data"});
    const auto thresholds = parse_thresholds(sw.thresholds);
    const auto split_data = read_qc_tsv(sw.data);
    std::vector<int> labels;
    for (const auto& s : split_data.samples) labels.push_back(s.label == Label::good ? 1 : 0);
    std::vector<double> predicted;
    if (!sw.scores.empty()) {
      const auto scores = read_scores(sw.scores);
      for (const auto& s : split_data.samples) {
        const auto it = scores.find(s.id);
        if (it == scores.end()) throw Error(ErrorCode::ShapeError, fmt::format("no score for sample {}", s.id));
        predicted.push_back(it->second);
      }
    } else if (!sw.features.empty() && !sw.model.empty()) {
      const auto params = model::load_model(sw.model);
      if (params.config.head != model::Head::regression) {
        throw Error(ErrorCode::ConfigError, "sweep needs a regression model (predicted TER)");
      }
      predicted = model::predict_all(params, load_dataset(sw.data, sw.features));
    } else {
      throw Error(ErrorCode::ConfigError, "sweep needs --scores or both --features and --model");
    }
    const auto result = metrics::regression_threshold_sweep(predicted, labels, {sw.lo, sw.hi, sw.step});
    std::string table = "tau\tpredicted_positive\ttrue_positive\tprecision\trecall\n";
    for (const auto& p : result.points) {
      table += fmt::format("{:.4f}\t{}\t{}\t{}\t{}\n", p.threshold, p.predicted_positive, p.true_positive,
                           undefined_or(p.precision), p.recall);
    }
    metrics::MetricBlock block;
    block.set("thresholds", format_thresholds(thresholds));
    block.set("samples", static_cast<double>(labels.size()));
    block.set("positives", static_cast<double>(result.positives));
    block.set("sweep_points", static_cast<double>(result.points.size()));
    block.set("max_precision", undefined_or(result.max_precision));
    for (double t : thresholds) block.set(metrics::r_at_p_key(t), metrics::r_at_p(result.points, t));
    if (sw.table.empty()) {
      out << table;
    } else {
      write_text(sw.table, table);
    }
    const std::string text = block.to_string();
    if (!sw.out.empty()) write_text(sw.out, text);
    out << text;
    return 0;
  }

  if (sub == report) {
    std::vector<metrics::MetricBlock> blocks;
    for (const auto& path : rp.inputs) blocks.push_back(metrics::MetricBlock::parse(read_text(path)));
    const std::string text = render_report(blocks);
    if (!rp.out.empty()) write_text(rp.out, text);
    out << text;
    return 0;
  }
  return 2;
}

}  // namespace

std::vector<double> parse_thresholds(std::string_view text) {
  std::vector<double> values = number_list(text, "threshold");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0 && values[i] <= 1.0)) {
      throw Error(ErrorCode::ConfigError, fmt::format("threshold {} outside (0, 1]", values[i]));
    }
    if (i > 0 && !(values[i] > values[i - 1])) {
      throw Error(ErrorCode::ConfigError, "thresholds must be strictly increasing");
    }
  }
  return values;
}

std::string format_thresholds(const std::vector<double>& thresholds) {
  std::string text;
  for (double t : thresholds) {
    if (!text.empty()) text += ',';
    text += metrics::format_threshold(t);
  }
  return text;
}

std::map<std::string, std::string> read_config(const fs::path& path) {
  std::map<std::string, std::string> values;
  const auto lines = read_lines(path);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw Error(ErrorCode::ConfigError, "expected key=value", i + 1);
    auto key = trim(line.substr(0, eq));
    if (key.starts_with("--")) key.remove_prefix(2);
    if (key.empty()) throw Error(ErrorCode::ConfigError, "empty key", i + 1);
    if (!values.emplace(std::string(key), std::string(trim(line.substr(eq + 1)))).second) {
      throw Error(ErrorCode::ConfigError, fmt::format("duplicate key '{}'", key), i + 1);
    }
  }
  return values;
}

model::Dataset load_dataset(const fs::path& tsv, const fs::path& features_path) {
  const auto split_data = read_qc_tsv(tsv);
  auto file = features::import_features(features_path);
  if (file.sequences.size() != split_data.samples.size()) {
    throw Error(ErrorCode::SchemaError, fmt::format("'{}' has {} sequences but '{}' has {} samples",
                                                    features_path.string(), file.sequences.size(), tsv.string(),
                                                    split_data.samples.size()));
  }
  std::unordered_map<std::size_t, std::size_t> by_id;
  for (std::size_t k = 0; k < file.sequences.size(); ++k) by_id.emplace(file.sequences[k].sample_id, k);
  model::Dataset data;
  for (const auto& s : split_data.samples) {
    const auto it = by_id.find(s.id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::SchemaError, fmt::format("'{}' has no features for sample {}", features_path.string(), s.id));
    }
    data.sequences.push_back(std::move(file.sequences[it->second]));
    data.labels.push_back(s.label == Label::good ? 1 : 0);
    data.hter.push_back(s.hter.value_or(0.0));
  }
  return data;
}

metrics::MetricBlock evaluate(const model::ModelParams& params, const model::Dataset& data,
                              const std::vector<double>& thresholds, const EvalMeta& meta) {
  if (data.labels.size() != data.size()) throw Error(ErrorCode::ShapeError, "every sample needs a label");
  const auto predictions = model::predict_all(params, data);
  metrics::MetricBlock block;
  block.set("model", meta.model.empty() ? "-" : meta.model);
  block.set("lang", meta.language_pair.empty() ? "-" : meta.language_pair);
  block.set("split", meta.split.empty() ? "-" : meta.split);
  block.set("head", std::string(model::to_string(params.config.head)));
  block.set("thresholds", format_thresholds(thresholds));
  block.set("samples", static_cast<double>(data.size()));
  std::size_t positives = 0;
  for (int l : data.labels) positives += l == 1;
  block.set("positives", static_cast<double>(positives));
  if (params.config.head == model::Head::classification) {
    const auto curve = metrics::pr_curve(predictions, data.labels);
    for (double t : thresholds) block.set(metrics::r_at_p_key(t), metrics::r_at_p(curve.points, t));
    const auto at_half = metrics::at_threshold(predictions, data.labels, 0.5);
    block.set("precision@0.5", undefined_or(at_half.precision));
    block.set("recall@0.5", at_half.recall);
    block.set("f1@0.5", at_half.f1);
  } else {
    if (data.hter.size() != data.size()) throw Error(ErrorCode::ShapeError, "regression eval needs hter values");
    const auto sweep = metrics::regression_threshold_sweep(predictions, data.labels);
    for (double t : thresholds) block.set(metrics::r_at_p_key(t), metrics::r_at_p(sweep.points, t));
    block.set("sweep_max_precision", undefined_or(sweep.max_precision));
    block.set("mae", metrics::mae(predictions, data.hter));
    block.set("rmse", metrics::rmse(predictions, data.hter));
    try {
      block.set("pearson", metrics::pearson(predictions, data.hter));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateVariance) throw;
      block.set("pearson", "undefined");
    }
  }
  return block;
}

std::string render_report(const std::vector<metrics::MetricBlock>& blocks) {
  if (blocks.empty()) throw Error(ErrorCode::ConfigError, "report needs at least one eval output");
  auto field = [](const metrics::MetricBlock& b, const char* key) {
    const auto v = b.get(key);
    if (!v) throw Error(ErrorCode::SchemaError, fmt::format("metric block lacks '{}'", key));
    return *v;
  };
  const std::string first = field(blocks[0], "thresholds");
  for (const auto& b : blocks) {
    const std::string mine = field(b, "thresholds");
    if (mine != first) {
      throw Error(ErrorCode::ConfigError, fmt::format("inconsistent threshold sets '{}' and '{}'", first, mine));
    }
  }
  const auto thresholds = parse_thresholds(first);
  std::string text = "| Model | Lang | Split |";
  std::string rule = "|---|---|---|";
  for (double t : thresholds) {
    text += fmt::format(" R@P_{} |", metrics::format_threshold(t));
    rule += "---|";
  }
  text += "\n" + rule + "\n";
  for (const auto& b : blocks) {
    text += fmt::format("| {} | {} | {} |", field(b, "model"), field(b, "lang"), field(b, "split"));
    for (double t : thresholds) text += fmt::format(" {:.4f} |", b.get_number(metrics::r_at_p_key(t)));
    text += "\n";
  }
  return text;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const Error& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << to_string(e.code()) << ": " << msg << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: InternalError: " << e.what() << "\n";
    return 1;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace qc::cli
