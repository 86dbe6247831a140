#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "qc/corpus.hpp"

namespace qc::features {

inline constexpr double kDefaultAlpha = 0.1;
inline constexpr std::size_t kDefaultOrder = 3;
inline constexpr std::size_t kDefaultEmbeddingDim = 16;
inline constexpr std::size_t kStateWidth = 3;
inline constexpr std::size_t kMismatchWidth = 4;

// Sorted training tokens followed by one shared unknown slot.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<Token> tokens);
  static Vocabulary from_sentences(std::span<const Tokens> sentences);

  std::size_t size() const { return tokens_.size() + 1; }
  std::size_t unk() const { return tokens_.size(); }
  std::size_t id(const Token& token) const;
  bool contains(const Token& token) const { return index_.count(token) != 0; }
  const std::vector<Token>& tokens() const { return tokens_; }

 private:
  std::vector<Token> tokens_;
  std::unordered_map<Token, std::size_t> index_;
};

enum class Direction { forward, backward };

std::string_view to_string(Direction direction);

// Next-token distribution for one context.
struct Prediction {
  double probability = 0.0;       // of the queried token
  double entropy = 0.0;           // nats, over the full vocabulary
  std::size_t context_order = 0;  // history length actually used; 0 = uniform
  std::size_t argmax = 0;         // most probable id, ties to the smallest id
  double argmax_probability = 0.0;
};

// Add-alpha n-gram model. A query uses the longest history suffix seen in
// training (length order-1 down to 1) and falls back to the uniform
// distribution when none was seen, so every context distribution is
// normalized by construction. The backward model is the forward
// construction applied to reversed sentences.
class DirectionalLM {
 public:
  using Context = std::vector<std::size_t>;

  struct ContextCounts {
    std::uint64_t total = 0;
    std::map<std::size_t, std::uint64_t> next;

    bool operator==(const ContextCounts&) const = default;
  };

  DirectionalLM() = default;
  static DirectionalLM train(std::span<const Tokens> sentences, Direction direction,
                             std::size_t order = kDefaultOrder, double alpha = kDefaultAlpha);

  // Rebuilds a model from counts (used when loading a saved extractor).
  DirectionalLM(Direction direction, std::size_t order, double alpha, Vocabulary vocabulary,
                std::map<Context, ContextCounts> counts);

  // History ids are in reading order, most recent last; padding uses boundary().
  Prediction predict(std::span<const std::size_t> history, std::size_t token) const;
  double probability(std::span<const std::size_t> history, std::size_t token) const;
  // Full distribution over vocabulary ids.
  std::vector<double> distribution(std::span<const std::size_t> history) const;

  // Per-position predictions for a sentence, read in this model's direction
  // and returned in sentence order.
  std::vector<Prediction> score_sentence(const Tokens& sentence) const;

  // Same counts, read in the other direction.
  DirectionalLM with_direction(Direction direction) const;

  Direction direction() const { return direction_; }
  std::size_t order() const { return order_; }
  double alpha() const { return alpha_; }
  const Vocabulary& vocabulary() const { return vocabulary_; }
  std::size_t boundary() const { return vocabulary_.size(); }
  const std::map<Context, ContextCounts>& counts() const { return counts_; }

 private:
  const ContextCounts* find_context(std::span<const std::size_t> history, std::size_t& used) const;

  Direction direction_ = Direction::forward;
  std::size_t order_ = kDefaultOrder;
  double alpha_ = kDefaultAlpha;
  Vocabulary vocabulary_;
  std::map<Context, ContextCounts> counts_;
};

using ParallelCorpus = std::vector<std::pair<Tokens, Tokens>>;  // (source, target)

// t(y | x) from within-pair co-occurrence: every source occurrence is
// paired with every target occurrence of the same sentence pair, and
// t(y | x) = (c(x, y) + alpha) / (c(x) + alpha * V_target) with
// c(x) = sum_y c(x, y). Unseen source tokens get the uniform distribution.
class LexicalTable {
 public:
  LexicalTable() = default;
  static LexicalTable train(const ParallelCorpus& corpus, double alpha = kDefaultAlpha);
  LexicalTable(double alpha, Vocabulary source, Vocabulary target,
               std::map<std::pair<std::size_t, std::size_t>, std::uint64_t> pair_counts);

  double probability(const Token& target, const Token& source) const;
  // Probability assigned to a target token never seen with this source.
  double floor(const Token& source) const;
  // max_i t(target | source_i).
  double max_over_source(const Token& target, const Tokens& source) const;

  double alpha() const { return alpha_; }
  const Vocabulary& source_vocabulary() const { return source_; }
  const Vocabulary& target_vocabulary() const { return target_; }
  const std::map<std::pair<std::size_t, std::size_t>, std::uint64_t>& pair_counts() const {
    return pair_counts_;
  }

 private:
  double alpha_ = kDefaultAlpha;
  Vocabulary source_;
  Vocabulary target_;
  std::map<std::pair<std::size_t, std::size_t>, std::uint64_t> pair_counts_;
  std::vector<std::uint64_t> source_totals_;
};

// Frozen random embeddings, seeded uniform(-0.1, 0.1). Unknown tokens map
// to a shared row; sentence edges use the boundary row.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  static EmbeddingTable random(const Vocabulary& vocabulary, std::size_t dim, std::uint64_t seed);
  EmbeddingTable(std::vector<Token> tokens, std::size_t dim, std::vector<double> values);

  std::span<const double> lookup(const Token& token) const;
  std::span<const double> unknown() const { return row(tokens_.size()); }
  std::span<const double> boundary() const { return row(tokens_.size() + 1); }
  std::size_t dim() const { return dim_; }
  const std::vector<Token>& tokens() const { return tokens_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::span<const double> row(std::size_t index) const;

  std::vector<Token> tokens_;
  std::unordered_map<Token, std::size_t> index_;
  std::size_t dim_ = 0;
  std::vector<double> values_;  // (tokens + unk + boundary) x dim
};

// Per-token feature blocks, concatenated in the order
// [backward state, forward state, previous embedding, next embedding, mismatch].
enum class Block : std::size_t { backward_state, forward_state, prev_embedding, next_embedding, mismatch };
inline constexpr std::size_t kBlockCount = 5;

std::string_view to_string(Block block);

struct BlockLayout {
  std::array<std::size_t, kBlockCount> widths{};

  static BlockLayout standard(std::size_t embedding_dim = kDefaultEmbeddingDim);
  std::size_t dim() const;
  std::size_t width(Block block) const { return widths[static_cast<std::size_t>(block)]; }
  std::size_t offset(Block block) const;
  std::span<const double> slice(std::span<const double> vector, Block block) const;

  bool operator==(const BlockLayout&) const = default;
};

struct TokenFeatureVector {
  std::vector<double> forward_state;   // left context, read left to right
  std::vector<double> backward_state;  // right context, read right to left
  std::vector<double> prev_embedding;
  std::vector<double> next_embedding;
  std::vector<double> mismatch;

  BlockLayout layout() const;
  std::vector<double> concat() const;
};

struct SentenceFeatureSequence {
  std::size_t sample_id = 0;
  BlockLayout layout;
  std::vector<double> values;  // length x dim, row-major

  std::size_t dim() const { return layout.dim(); }
  std::size_t length() const { return dim() == 0 ? 0 : values.size() / dim(); }
  std::span<const double> row(std::size_t t) const {
    return std::span<const double>(values).subspan(t * dim(), dim());
  }

  bool operator==(const SentenceFeatureSequence&) const = default;
};

struct ExtractorConfig {
  std::size_t order = kDefaultOrder;
  double alpha = kDefaultAlpha;
  std::size_t embedding_dim = kDefaultEmbeddingDim;
  std::uint64_t seed = 0;
  TokenizerOptions tokenizer;
};

struct FeatureExtractor {
  ExtractorConfig config;
  DirectionalLM forward;
  DirectionalLM backward;
  LexicalTable lexical;
  EmbeddingTable embeddings;

  BlockLayout layout() const { return BlockLayout::standard(embeddings.dim()); }
};

std::pair<DirectionalLM, DirectionalLM> train_directional_lms(std::span<const Tokens> targets,
                                                              std::size_t order = kDefaultOrder,
                                                              double alpha = kDefaultAlpha);
LexicalTable train_lexical_table(const ParallelCorpus& corpus, double alpha = kDefaultAlpha);

FeatureExtractor train_feature_extractor(const ParallelCorpus& corpus,
                                         const ExtractorConfig& config = {});

// [target == forward argmax, log P_fwd(target | history),
//  P_fwd(argmax) - P_fwd(target), max_i t(target | source_i)].
std::array<double, kMismatchWidth> mismatch_features(const Tokens& source, const Tokens& target,
                                                     const DirectionalLM& forward,
                                                     const LexicalTable& lexical, std::size_t j);

// [log P(token | history), entropy of the context distribution, history order used].
std::vector<std::array<double, kStateWidth>> state_features(const DirectionalLM& lm,
                                                            const Tokens& sentence);

std::vector<TokenFeatureVector> token_features(const QESample& sample, const FeatureExtractor& fe);
SentenceFeatureSequence extract_features(const QESample& sample, const FeatureExtractor& fe);

void save_extractor(const FeatureExtractor& fe, const std::filesystem::path& path);
FeatureExtractor load_extractor(const std::filesystem::path& path);
std::string extractor_to_string(const FeatureExtractor& fe);
FeatureExtractor extractor_from_string(const std::string& text);

// Feature file: a header line
//   #qc-features<TAB>version=1<TAB>dim=D<TAB>blocks=w1,w2,w3,w4,w5
// then one record per line
//   id<TAB>dim<TAB>row_1<TAB>...<TAB>row_T
// with each row D space-separated 32-bit floats.
struct FeatureFile {
  BlockLayout layout;
  std::vector<SentenceFeatureSequence> sequences;
};

void export_features(const FeatureFile& file, const std::filesystem::path& path);
std::string features_to_string(const FeatureFile& file);
FeatureFile import_features(const std::filesystem::path& path);
FeatureFile features_from_string(std::string_view text);

}  // namespace qc::features
