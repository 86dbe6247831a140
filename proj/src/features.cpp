#include "qc/features.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "qc/error.hpp"
#include "qc/rng.hpp"

namespace qc::features {

using json = nlohmann::json;

Vocabulary::Vocabulary(std::vector<Token> tokens) : tokens_(std::move(tokens)) {
  std::sort(tokens_.begin(), tokens_.end());
  tokens_.erase(std::unique(tokens_.begin(), tokens_.end()), tokens_.end());
  for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], i);
}

Vocabulary Vocabulary::from_sentences(std::span<const Tokens> sentences) {
  std::vector<Token> all;
  for (const auto& sentence : sentences) all.insert(all.end(), sentence.begin(), sentence.end());
  return Vocabulary(std::move(all));
}

std::size_t Vocabulary::id(const Token& token) const {
  const auto it = index_.find(token);
  return it == index_.end() ? unk() : it->second;
}

std::string_view to_string(Direction direction) {
  return direction == Direction::forward ? "forward" : "backward";
}

namespace {

Direction parse_direction(const std::string& text) {
  if (text == "forward") return Direction::forward;
  if (text == "backward") return Direction::backward;
  throw Error(ErrorCode::SchemaError, fmt::format("unknown LM direction '{}'", text));
}

// Ids in the order the model reads them.
std::vector<std::size_t> reading_ids(const DirectionalLM& lm, const Tokens& sentence) {
  std::vector<std::size_t> ids;
  ids.reserve(sentence.size());
  for (const auto& token : sentence) ids.push_back(lm.vocabulary().id(token));
  if (lm.direction() == Direction::backward) std::reverse(ids.begin(), ids.end());
  return ids;
}

}  // namespace

DirectionalLM::DirectionalLM(Direction direction, std::size_t order, double alpha,
                             Vocabulary vocabulary, std::map<Context, ContextCounts> counts)
    : direction_(direction),
      order_(order),
      alpha_(alpha),
      vocabulary_(std::move(vocabulary)),
      counts_(std::move(counts)) {
  if (order_ < 2) throw Error(ErrorCode::ConfigError, "LM order must be at least 2");
  if (!(alpha_ > 0.0)) throw Error(ErrorCode::ConfigError, "smoothing alpha must be positive");
}

DirectionalLM DirectionalLM::train(std::span<const Tokens> sentences, Direction direction,
                                   std::size_t order, double alpha) {
  if (sentences.empty()) throw Error(ErrorCode::EmptyCorpus, "no sentences to train an LM on");
  DirectionalLM lm(direction, order, alpha, Vocabulary::from_sentences(sentences), {});
  const std::size_t width = order - 1;
  for (const auto& sentence : sentences) {
    if (sentence.empty()) throw Error(ErrorCode::EmptySentence, "empty sentence in LM corpus");
    std::vector<std::size_t> padded(width, lm.boundary());
    const auto ids = reading_ids(lm, sentence);
    padded.insert(padded.end(), ids.begin(), ids.end());
    for (std::size_t t = width; t < padded.size(); ++t) {
      for (std::size_t length = 1; length <= width; ++length) {
        Context context(padded.begin() + static_cast<std::ptrdiff_t>(t - length),
                        padded.begin() + static_cast<std::ptrdiff_t>(t));
        auto& counts = lm.counts_[std::move(context)];
        ++counts.total;
        ++counts.next[padded[t]];
      }
    }
  }
  return lm;
}

const DirectionalLM::ContextCounts* DirectionalLM::find_context(
    std::span<const std::size_t> history, std::size_t& used) const {
  const std::size_t longest = std::min(order_ - 1, history.size());
  for (std::size_t length = longest; length >= 1; --length) {
    const auto suffix = history.subspan(history.size() - length);
    const auto it = counts_.find(Context(suffix.begin(), suffix.end()));
    if (it != counts_.end()) {
      used = length;
      return &it->second;
    }
  }
  used = 0;
  return nullptr;
}

Prediction DirectionalLM::predict(std::span<const std::size_t> history, std::size_t token) const {
  const auto vocab = static_cast<double>(vocabulary_.size());
  Prediction p;
  const ContextCounts* counts = find_context(history, p.context_order);
  if (!counts) {
    p.probability = 1.0 / vocab;
    p.entropy = std::log(vocab);
    p.argmax = 0;
    p.argmax_probability = 1.0 / vocab;
    return p;
  }
  const double z = static_cast<double>(counts->total) + alpha_ * vocab;
  std::uint64_t best = 0;
  double entropy = 0.0;
  for (const auto& [id, count] : counts->next) {
    const double q = (static_cast<double>(count) + alpha_) / z;
    entropy -= q * std::log(q);
    if (count > best) {
      best = count;
      p.argmax = id;
    }
  }
  const double unseen = vocab - static_cast<double>(counts->next.size());
  const double floor = alpha_ / z;
  entropy -= unseen * floor * std::log(floor);
  p.entropy = entropy;
  p.argmax_probability = (static_cast<double>(best) + alpha_) / z;
  const auto it = counts->next.find(token);
  p.probability = (static_cast<double>(it == counts->next.end() ? 0 : it->second) + alpha_) / z;
  return p;
}

double DirectionalLM::probability(std::span<const std::size_t> history, std::size_t token) const {
  return predict(history, token).probability;
}

std::vector<double> DirectionalLM::distribution(std::span<const std::size_t> history) const {
  std::vector<double> probs(vocabulary_.size());
  for (std::size_t id = 0; id < probs.size(); ++id) probs[id] = probability(history, id);
  return probs;
}

std::vector<Prediction> DirectionalLM::score_sentence(const Tokens& sentence) const {
  const std::size_t width = order_ - 1;
  std::vector<std::size_t> padded(width, boundary());
  const auto ids = reading_ids(*this, sentence);
  padded.insert(padded.end(), ids.begin(), ids.end());
  std::vector<Prediction> out(sentence.size());
  for (std::size_t t = 0; t < ids.size(); ++t) {
    const auto history = std::span<const std::size_t>(padded).subspan(t, width);
    const std::size_t j = direction_ == Direction::forward ? t : ids.size() - 1 - t;
    out[j] = predict(history, ids[t]);
  }
  return out;
}

DirectionalLM DirectionalLM::with_direction(Direction direction) const {
  DirectionalLM copy = *this;
  copy.direction_ = direction;
  return copy;
}

LexicalTable::LexicalTable(double alpha, Vocabulary source, Vocabulary target,
                           std::map<std::pair<std::size_t, std::size_t>, std::uint64_t> pair_counts)
    : alpha_(alpha),
      source_(std::move(source)),
      target_(std::move(target)),
      pair_counts_(std::move(pair_counts)),
      source_totals_(source_.size(), 0) {
  if (!(alpha_ > 0.0)) throw Error(ErrorCode::ConfigError, "smoothing alpha must be positive");
  for (const auto& [key, count] : pair_counts_) {
    if (key.first >= source_totals_.size() || key.second >= target_.size()) {
      throw Error(ErrorCode::SchemaError, "lexical pair id out of range");
    }
    source_totals_[key.first] += count;
  }
}

LexicalTable LexicalTable::train(const ParallelCorpus& corpus, double alpha) {
  if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "no sentence pairs for the lexical table");
  std::vector<Tokens> sources;
  std::vector<Tokens> targets;
  for (const auto& [src, tgt] : corpus) {
    sources.push_back(src);
    targets.push_back(tgt);
  }
  Vocabulary source = Vocabulary::from_sentences(sources);
  Vocabulary target = Vocabulary::from_sentences(targets);
  std::map<std::pair<std::size_t, std::size_t>, std::uint64_t> counts;
  for (const auto& [src, tgt] : corpus) {
    for (const auto& x : src) {
      const std::size_t xi = source.id(x);
      for (const auto& y : tgt) ++counts[{xi, target.id(y)}];
    }
  }
  return LexicalTable(alpha, std::move(source), std::move(target), std::move(counts));
}

double LexicalTable::probability(const Token& target, const Token& source) const {
  const auto v = static_cast<double>(target_.size());
  if (!source_.contains(source)) return 1.0 / v;
  const std::size_t x = source_.id(source);
  const auto it = pair_counts_.find({x, target_.id(target)});
  const double count = it == pair_counts_.end() ? 0.0 : static_cast<double>(it->second);
  return (count + alpha_) / (static_cast<double>(source_totals_[x]) + alpha_ * v);
}

double LexicalTable::floor(const Token& source) const {
  const auto v = static_cast<double>(target_.size());
  if (!source_.contains(source)) return 1.0 / v;
  return alpha_ / (static_cast<double>(source_totals_[source_.id(source)]) + alpha_ * v);
}

double LexicalTable::max_over_source(const Token& target, const Tokens& source) const {
  double best = 0.0;
  for (const auto& x : source) best = std::max(best, probability(target, x));
  return best;
}

EmbeddingTable EmbeddingTable::random(const Vocabulary& vocabulary, std::size_t dim,
                                      std::uint64_t seed) {
  if (dim == 0) throw Error(ErrorCode::ConfigError, "embedding dimension must be positive");
  Rng rng(seed);
  std::vector<double> values((vocabulary.tokens().size() + 2) * dim);
  for (double& v : values) v = rng.uniform(-0.1, 0.1);
  return EmbeddingTable(vocabulary.tokens(), dim, std::move(values));
}

EmbeddingTable::EmbeddingTable(std::vector<Token> tokens, std::size_t dim, std::vector<double> values)
    : tokens_(std::move(tokens)), dim_(dim), values_(std::move(values)) {
  if (values_.size() != (tokens_.size() + 2) * dim_) {
    throw Error(ErrorCode::SchemaError, "embedding table has the wrong number of values");
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], i);
}

std::span<const double> EmbeddingTable::row(std::size_t index) const {
  return std::span<const double>(values_).subspan(index * dim_, dim_);
}

std::span<const double> EmbeddingTable::lookup(const Token& token) const {
  const auto it = index_.find(token);
  return it == index_.end() ? unknown() : row(it->second);
}

std::string_view to_string(Block block) {
  switch (block) {
    case Block::backward_state: return "backward_state";
    case Block::forward_state: return "forward_state";
    case Block::prev_embedding: return "prev_embedding";
    case Block::next_embedding: return "next_embedding";
    case Block::mismatch: return "mismatch";
  }
  return "block";
}

BlockLayout BlockLayout::standard(std::size_t embedding_dim) {
  return BlockLayout{{kStateWidth, kStateWidth, embedding_dim, embedding_dim, kMismatchWidth}};
}

std::size_t BlockLayout::dim() const { return std::accumulate(widths.begin(), widths.end(), std::size_t{0}); }

std::size_t BlockLayout::offset(Block block) const {
  const auto index = static_cast<std::size_t>(block);
  return std::accumulate(widths.begin(), widths.begin() + static_cast<std::ptrdiff_t>(index),
                         std::size_t{0});
}

std::span<const double> BlockLayout::slice(std::span<const double> vector, Block block) const {
  if (vector.size() != dim()) throw Error(ErrorCode::ShapeError, "vector does not match layout");
  return vector.subspan(offset(block), width(block));
}

BlockLayout TokenFeatureVector::layout() const {
  return BlockLayout{{backward_state.size(), forward_state.size(), prev_embedding.size(),
                      next_embedding.size(), mismatch.size()}};
}

std::vector<double> TokenFeatureVector::concat() const {
  std::vector<double> out;
  out.reserve(layout().dim());
  for (const auto* block : {&backward_state, &forward_state, &prev_embedding, &next_embedding, &mismatch}) {
    out.insert(out.end(), block->begin(), block->end());
  }
  return out;
}

std::pair<DirectionalLM, DirectionalLM> train_directional_lms(std::span<const Tokens> targets,
                                                              std::size_t order, double alpha) {
  return {DirectionalLM::train(targets, Direction::forward, order, alpha),
          DirectionalLM::train(targets, Direction::backward, order, alpha)};
}

LexicalTable train_lexical_table(const ParallelCorpus& corpus, double alpha) {
  return LexicalTable::train(corpus, alpha);
}

FeatureExtractor train_feature_extractor(const ParallelCorpus& corpus, const ExtractorConfig& config) {
  if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "parallel corpus is empty");
  std::vector<Tokens> targets;
  targets.reserve(corpus.size());
  for (const auto& pair : corpus) targets.push_back(pair.second);
  FeatureExtractor fe;
  fe.config = config;
  std::tie(fe.forward, fe.backward) = train_directional_lms(targets, config.order, config.alpha);
  fe.lexical = train_lexical_table(corpus, config.alpha);
  fe.embeddings = EmbeddingTable::random(fe.forward.vocabulary(), config.embedding_dim, config.seed);
  return fe;
}

namespace {

std::array<double, kMismatchWidth> mismatch_from(const Prediction& p, std::size_t actual,
                                                 const Token& target, const Tokens& source,
                                                 const LexicalTable& lexical) {
  return {p.argmax == actual ? 1.0 : 0.0, std::log(p.probability),
          p.argmax_probability - p.probability, lexical.max_over_source(target, source)};
}

}  // namespace

std::array<double, kMismatchWidth> mismatch_features(const Tokens& source, const Tokens& target,
                                                     const DirectionalLM& forward,
                                                     const LexicalTable& lexical, std::size_t j) {
  if (j >= target.size()) {
    throw Error(ErrorCode::IndexError,
                fmt::format("token index {} outside target of length {}", j, target.size()));
  }
  const auto predictions = forward.score_sentence(target);
  return mismatch_from(predictions[j], forward.vocabulary().id(target[j]), target[j], source, lexical);
}

std::vector<std::array<double, kStateWidth>> state_features(const DirectionalLM& lm,
                                                            const Tokens& sentence) {
  std::vector<std::array<double, kStateWidth>> out;
  out.reserve(sentence.size());
  for (const auto& p : lm.score_sentence(sentence)) {
    out.push_back({std::log(p.probability), p.entropy, static_cast<double>(p.context_order)});
  }
  return out;
}

std::vector<TokenFeatureVector> token_features(const QESample& sample, const FeatureExtractor& fe) {
  const Tokens& target = sample.target;
  if (target.empty()) throw Error(ErrorCode::EmptySentence, "target sentence is empty");
  const auto forward = fe.forward.score_sentence(target);
  const auto forward_state = state_features(fe.forward, target);
  const auto backward_state = state_features(fe.backward, target);
  const auto span_vec = [](std::span<const double> s) { return std::vector<double>(s.begin(), s.end()); };

  std::vector<TokenFeatureVector> out(target.size());
  for (std::size_t j = 0; j < target.size(); ++j) {
    auto& v = out[j];
    v.forward_state.assign(forward_state[j].begin(), forward_state[j].end());
    v.backward_state.assign(backward_state[j].begin(), backward_state[j].end());
    v.prev_embedding = span_vec(j == 0 ? fe.embeddings.boundary() : fe.embeddings.lookup(target[j - 1]));
    v.next_embedding =
        span_vec(j + 1 == target.size() ? fe.embeddings.boundary() : fe.embeddings.lookup(target[j + 1]));
    const auto mm = mismatch_from(forward[j], fe.forward.vocabulary().id(target[j]), target[j],
                                  sample.source, fe.lexical);
    v.mismatch.assign(mm.begin(), mm.end());
  }
  return out;
}

SentenceFeatureSequence extract_features(const QESample& sample, const FeatureExtractor& fe) {
  SentenceFeatureSequence seq;
  seq.sample_id = sample.id;
  seq.layout = fe.layout();
  for (const auto& v : token_features(sample, fe)) {
    const auto row = v.concat();
    seq.values.insert(seq.values.end(), row.begin(), row.end());
  }
  return seq;
}

// ---- extractor persistence ----

namespace {

json lm_to_json(const DirectionalLM& lm) {
  json contexts = json::array();
  for (const auto& [history, counts] : lm.counts()) {
    json next = json::array();
    for (const auto& [id, count] : counts.next) next.push_back({id, count});
    contexts.push_back({{"history", history}, {"next", next}});
  }
  return {{"direction", to_string(lm.direction())},
          {"order", lm.order()},
          {"alpha", lm.alpha()},
          {"vocab", lm.vocabulary().tokens()},
          {"contexts", contexts}};
}

DirectionalLM lm_from_json(const json& j) {
  std::map<DirectionalLM::Context, DirectionalLM::ContextCounts> counts;
  for (const auto& ctx : j.at("contexts")) {
    DirectionalLM::ContextCounts c;
    for (const auto& entry : ctx.at("next")) {
      const auto count = entry.at(1).get<std::uint64_t>();
      c.next[entry.at(0).get<std::size_t>()] = count;
      c.total += count;
    }
    counts.emplace(ctx.at("history").get<DirectionalLM::Context>(), std::move(c));
  }
  return DirectionalLM(parse_direction(j.at("direction").get<std::string>()),
                       j.at("order").get<std::size_t>(), j.at("alpha").get<double>(),
                       Vocabulary(j.at("vocab").get<std::vector<Token>>()), std::move(counts));
}

}  // namespace

std::string extractor_to_string(const FeatureExtractor& fe) {
  json lex_pairs = json::array();
  for (const auto& [key, count] : fe.lexical.pair_counts()) {
    lex_pairs.push_back({key.first, key.second, count});
  }
  const json doc = {
      {"format", "qc-feature-extractor"},
      {"version", 1},
      {"config",
       {{"order", fe.config.order},
        {"alpha", fe.config.alpha},
        {"embedding_dim", fe.config.embedding_dim},
        {"seed", fe.config.seed},
        {"lowercase", fe.config.tokenizer.lowercase}}},
      {"forward", lm_to_json(fe.forward)},
      {"backward", lm_to_json(fe.backward)},
      {"lexical",
       {{"alpha", fe.lexical.alpha()},
        {"source_vocab", fe.lexical.source_vocabulary().tokens()},
        {"target_vocab", fe.lexical.target_vocabulary().tokens()},
        {"pairs", lex_pairs}}},
      {"embeddings",
       {{"dim", fe.embeddings.dim()},
        {"tokens", fe.embeddings.tokens()},
        {"values", fe.embeddings.values()}}},
  };
  return doc.dump() + "\n";
}

FeatureExtractor extractor_from_string(const std::string& text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("format") != "qc-feature-extractor" || doc.at("version") != 1) {
      throw Error(ErrorCode::SchemaError, "not a version-1 feature extractor file");
    }
    FeatureExtractor fe;
    const auto& cfg = doc.at("config");
    fe.config.order = cfg.at("order").get<std::size_t>();
    fe.config.alpha = cfg.at("alpha").get<double>();
    fe.config.embedding_dim = cfg.at("embedding_dim").get<std::size_t>();
    fe.config.seed = cfg.at("seed").get<std::uint64_t>();
    fe.config.tokenizer.lowercase = cfg.at("lowercase").get<bool>();
    fe.forward = lm_from_json(doc.at("forward"));
    fe.backward = lm_from_json(doc.at("backward"));
    const auto& lex = doc.at("lexical");
    std::map<std::pair<std::size_t, std::size_t>, std::uint64_t> pairs;
    for (const auto& p : lex.at("pairs")) {
      pairs[{p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>()}] = p.at(2).get<std::uint64_t>();
    }
    fe.lexical = LexicalTable(lex.at("alpha").get<double>(),
                              Vocabulary(lex.at("source_vocab").get<std::vector<Token>>()),
                              Vocabulary(lex.at("target_vocab").get<std::vector<Token>>()),
                              std::move(pairs));
    const auto& emb = doc.at("embeddings");
    fe.embeddings = EmbeddingTable(emb.at("tokens").get<std::vector<Token>>(),
                                   emb.at("dim").get<std::size_t>(),
                                   emb.at("values").get<std::vector<double>>());
    return fe;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, fmt::format("malformed feature extractor: {}", e.what()));
  }
}

void save_extractor(const FeatureExtractor& fe, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write '{}'", path.string()));
  out << extractor_to_string(fe);
}

FeatureExtractor load_extractor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot open '{}'", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return extractor_from_string(buffer.str());
}

// ---- feature files ----

namespace {

constexpr std::string_view kFeatureMagic = "#qc-features";

void append_float(std::string& out, double value) {
  const auto f = static_cast<float>(value);
  if (!std::isfinite(value) || !std::isfinite(f)) {
    throw Error(ErrorCode::ValueError, "feature value is not a finite 32-bit float");
  }
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, f);
  out.append(buf, end);
}

std::vector<std::string_view> split_on(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t begin = 0;
  while (true) {
    const auto pos = text.find(sep, begin);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(begin));
      return parts;
    }
    parts.push_back(text.substr(begin, pos - begin));
    begin = pos + 1;
  }
}

std::size_t parse_size(std::string_view text, std::size_t line) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::ParseError, fmt::format("expected an integer, found '{}'", text), line);
  }
  return value;
}

std::string_view header_value(std::string_view field, std::string_view key, std::size_t line) {
  if (field.substr(0, key.size()) != key || field.size() <= key.size() || field[key.size()] != '=') {
    throw Error(ErrorCode::SchemaError, fmt::format("feature header lacks '{}'", key), line);
  }
  return field.substr(key.size() + 1);
}

}  // namespace

std::string features_to_string(const FeatureFile& file) {
  const std::size_t dim = file.layout.dim();
  if (dim == 0) throw Error(ErrorCode::SchemaError, "feature layout has zero dimension");
  std::string out = fmt::format("{}\tversion=1\tdim={}\tblocks={}", kFeatureMagic, dim,
                                fmt::join(file.layout.widths, ","));
  out.push_back('\n');
  for (const auto& seq : file.sequences) {
    if (seq.layout != file.layout) {
      throw Error(ErrorCode::SchemaError,
                  fmt::format("sequence {} has a different block layout", seq.sample_id));
    }
    if (seq.values.empty() || seq.values.size() % dim != 0) {
      throw Error(ErrorCode::SchemaError, fmt::format("sequence {} is malformed", seq.sample_id));
    }
    out += fmt::format("{}\t{}", seq.sample_id, dim);
    for (std::size_t i = 0; i < seq.values.size(); ++i) {
      out.push_back(i % dim == 0 ? '\t' : ' ');
      append_float(out, seq.values[i]);
    }
    out.push_back('\n');
  }
  return out;
}

void export_features(const FeatureFile& file, const std::filesystem::path& path) {
  const std::string text = features_to_string(file);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write '{}'", path.string()));
  out << text;
}

FeatureFile features_from_string(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw Error(ErrorCode::SchemaError, "feature file is empty", 1);
  const auto header = split_on(lines[0], '\t');
  if (header.size() != 4 || header[0] != kFeatureMagic || header[1] != "version=1") {
    throw Error(ErrorCode::SchemaError, "bad feature file header", 1);
  }
  FeatureFile file;
  const std::size_t dim = parse_size(header_value(header[2], "dim", 1), 1);
  const auto widths = split_on(header_value(header[3], "blocks", 1), ',');
  if (widths.size() != kBlockCount) {
    throw Error(ErrorCode::SchemaError, "feature header must declare five block widths", 1);
  }
  for (std::size_t b = 0; b < kBlockCount; ++b) file.layout.widths[b] = parse_size(widths[b], 1);
  if (file.layout.dim() != dim || dim == 0) {
    throw Error(ErrorCode::SchemaError, "block widths do not sum to the declared dim", 1);
  }

  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line = i + 1;
    if (lines[i].empty()) continue;
    const auto fields = split_on(lines[i], '\t');
    if (fields.size() < 3) throw Error(ErrorCode::SchemaError, "record has no vectors", line);
    SentenceFeatureSequence seq;
    seq.sample_id = parse_size(fields[0], line);
    seq.layout = file.layout;
    const std::size_t record_dim = parse_size(fields[1], line);
    if (record_dim != dim) {
      throw Error(ErrorCode::SchemaError,
                  fmt::format("record dim {} differs from file dim {}", record_dim, dim), line);
    }
    for (std::size_t r = 2; r < fields.size(); ++r) {
      const auto numbers = split_on(fields[r], ' ');
      if (numbers.size() != dim) {
        throw Error(ErrorCode::SchemaError,
                    fmt::format("vector has {} entries, expected {}", numbers.size(), dim), line);
      }
      for (const auto number : numbers) {
        float value = 0.0f;
        const auto [ptr, ec] = std::from_chars(number.data(), number.data() + number.size(), value);
        if (ec == std::errc::result_out_of_range) {
          throw Error(ErrorCode::ValueError, fmt::format("'{}' overflows a 32-bit float", number), line);
        }
        if (number.empty() || ec != std::errc() || ptr != number.data() + number.size()) {
          throw Error(ErrorCode::ParseError, fmt::format("bad number '{}'", number), line);
        }
        if (!std::isfinite(value)) {
          throw Error(ErrorCode::ValueError, fmt::format("non-finite entry '{}'", number), line);
        }
        seq.values.push_back(static_cast<double>(value));
      }
    }
    file.sequences.push_back(std::move(seq));
  }
  return file;
}

FeatureFile import_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot open '{}'", path.string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return features_from_string(buffer.str());
}

}  // namespace qc::features
