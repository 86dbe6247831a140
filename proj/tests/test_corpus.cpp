#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "qc/corpus.hpp"
#include "qc/error.hpp"
#include "qc/rng.hpp"

namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("qc_corpus_" + std::to_string(counter_++) + "_" +
                                         std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }

  fs::path write(const std::string& name, const std::string& content) const {
    const auto p = path_ / name;
    std::ofstream(p, std::ios::binary) << content;
    return p;
  }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

template <typename F>
qc::Error error_of(F&& fn) {
  try {
    fn();
  } catch (const qc::Error& e) {
    return e;
  }
  ADD_FAILURE() << "expected qc::Error";
  return qc::Error(qc::ErrorCode::IoError, "none");
}

TEST(TokenizeTest, Examples) {
  EXPECT_EQ(qc::tokenize("Hello world"), (qc::Tokens{"hello", "world"}));
  EXPECT_EQ(qc::tokenize("a  b\tc"), (qc::Tokens{"a", "b", "c"}));
  EXPECT_EQ(qc::tokenize("Hello, World!", {.lowercase = false}), (qc::Tokens{"Hello,", "World!"}));
  EXPECT_EQ(qc::tokenize("  Über  "), (qc::Tokens{"Über"}));
  EXPECT_EQ(error_of([] { qc::tokenize(""); }).code(), qc::ErrorCode::EmptySentence);
  EXPECT_EQ(error_of([] { qc::tokenize(" \t "); }).code(), qc::ErrorCode::EmptySentence);
}

TEST(LoadTest, ReadsHterFile) {
  TempDir dir;
  const qc::QEPaths paths{dir.write("src", "a\nb\nc\n"), dir.write("mt", "x\ny\nz\n"), std::nullopt,
                          dir.write("hter", "0.0\n0.25\n1.0\n")};
  const auto split = qc::load_qe_dataset(paths, {.name = qc::SplitName::dev, .language_pair = "de-en"});
  ASSERT_EQ(split.samples.size(), 3u);
  EXPECT_EQ(split.name, qc::SplitName::dev);
  EXPECT_EQ(split.language_pair, "de-en");
  EXPECT_EQ(split.samples[0].hter, 0.0);
  EXPECT_EQ(split.samples[1].hter, 0.25);
  EXPECT_EQ(split.samples[2].hter, 1.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(split.samples[i].id, i);
  EXPECT_EQ(qc::load_qe_dataset(paths), qc::load_qe_dataset(paths));
}

TEST(LoadTest, MisalignmentNamesFirstMissingLine) {
  TempDir dir;
  const qc::QEPaths paths{dir.write("src", "a\nb\nc\n"), dir.write("mt", "x\ny\n"), std::nullopt,
                          dir.write("hter", "0\n0\n0\n")};
  const auto e = error_of([&] { qc::load_qe_dataset(paths); });
  EXPECT_EQ(e.code(), qc::ErrorCode::AlignmentError);
  EXPECT_EQ(e.line(), 3u);
}

TEST(LoadTest, RecomputesHterFromPostEdit) {
  TempDir dir;
  const qc::QEPaths paths{dir.write("src", "s\n"), dir.write("mt", "a b x d e\n"), dir.write("pe", "a b c d e\n"),
                          std::nullopt};
  const auto split = qc::load_qe_dataset(paths);
  ASSERT_EQ(split.samples.size(), 1u);
  EXPECT_DOUBLE_EQ(*split.samples[0].hter, 0.2);
  EXPECT_EQ(split.samples[0].post_edit, (qc::Tokens{"a", "b", "c", "d", "e"}));
}

TEST(LoadTest, FileHterWinsAndMismatchWarns) {
  TempDir dir;
  const qc::QEPaths paths{dir.write("src", "s\nt\n"), dir.write("mt", "a b x d e\na b\n"),
                          dir.write("pe", "a b c d e\na b\n"), dir.write("hter", "0.5\n0.005\n")};
  std::vector<std::string> warnings;
  const auto split = qc::load_qe_dataset(paths, {.on_warning = [&](const std::string& w) { warnings.push_back(w); }});
  EXPECT_EQ(split.samples[0].hter, 0.5);
  EXPECT_EQ(split.samples[1].hter, 0.005);
  ASSERT_EQ(warnings.size(), 1u);  // second line is within tolerance
  EXPECT_NE(warnings[0].find("line 1"), std::string::npos) << warnings[0];
}

TEST(LoadTest, BadDecimalIsParseErrorWithLine) {
  TempDir dir;
  const qc::QEPaths paths{dir.write("src", "a\nb\n"), dir.write("mt", "x\ny\n"), std::nullopt,
                          dir.write("hter", "0.1\nzero\n")};
  const auto e = error_of([&] { qc::load_qe_dataset(paths); });
  EXPECT_EQ(e.code(), qc::ErrorCode::ParseError);
  EXPECT_EQ(e.line(), 2u);
}

TEST(LoadTest, EmptyLineIsEmptySentenceWithLine) {
  TempDir dir;
  const qc::QEPaths paths{dir.write("src", "a\n\n"), dir.write("mt", "x\ny\n"), std::nullopt,
                          dir.write("hter", "0\n0\n")};
  const auto e = error_of([&] { qc::load_qe_dataset(paths); });
  EXPECT_EQ(e.code(), qc::ErrorCode::EmptySentence);
  EXPECT_EQ(e.line(), 2u);
}

qc::QESplit unlabeled(std::vector<double> hters) {
  qc::QESplit split;
  for (std::size_t i = 0; i < hters.size(); ++i) {
    qc::QESample s;
    s.id = i;
    s.source = {"s" + std::to_string(i)};
    s.target = {"t" + std::to_string(i)};
    s.hter = hters[i];
    split.samples.push_back(s);
  }
  return split;
}

TEST(LabelTest, Examples) {
  const auto labeled = qc::derive_labels(unlabeled({0.0, 0.3, 0.0, 1.2}));
  EXPECT_EQ(labeled.samples[0].label, qc::Label::good);
  EXPECT_EQ(labeled.samples[1].label, qc::Label::bad);
  EXPECT_DOUBLE_EQ(qc::split_stats(labeled).good_fraction, 0.5);
  EXPECT_EQ(qc::derive_labels(unlabeled({0.0001}), 1e-9).samples[0].label, qc::Label::bad);
  EXPECT_EQ(qc::derive_labels(unlabeled({1e-10})).samples[0].label, qc::Label::good);
}

TEST(LabelTest, MissingScoreAndBadEpsilon) {
  auto split = unlabeled({0.0, 0.1});
  split.samples[1].hter.reset();
  EXPECT_EQ(error_of([&] { qc::derive_labels(split); }).code(), qc::ErrorCode::MissingScore);
  EXPECT_EQ(error_of([] { qc::derive_labels(unlabeled({0.0}), -1.0); }).code(), qc::ErrorCode::ConfigError);
}

TEST(LabelTest, IdempotentAndMonotoneInEpsilon) {
  qc::Rng rng(5);
  std::vector<double> hters;
  for (int i = 0; i < 300; ++i) hters.push_back(rng.bernoulli(0.3) ? 0.0 : rng.uniform(0.0, 0.2));
  const auto split = unlabeled(hters);
  const auto once = qc::derive_labels(split);
  EXPECT_EQ(qc::derive_labels(once), once);
  const std::vector<double> epsilons{0.1, 0.05, 0.01, 1e-9, 0.0};
  for (std::size_t k = 1; k < epsilons.size(); ++k) {
    const auto looser = qc::derive_labels(split, epsilons[k - 1]);
    const auto tighter = qc::derive_labels(split, epsilons[k]);
    for (std::size_t i = 0; i < hters.size(); ++i) {
      if (looser.samples[i].label == qc::Label::bad) EXPECT_EQ(tighter.samples[i].label, qc::Label::bad);
    }
  }
}

TEST(StatsTest, CountsAndFormatting) {
  const auto two_good = qc::split_stats(qc::derive_labels(unlabeled({0.0, 0.5, 0.0, 0.2})));
  EXPECT_EQ(two_good.count, 4u);
  EXPECT_EQ(two_good.good, 2u);
  EXPECT_DOUBLE_EQ(two_good.good_fraction, 0.5);
  const auto one_bad = qc::split_stats(qc::derive_labels(unlabeled({0.4})));
  EXPECT_EQ(one_bad.count, 1u);
  EXPECT_DOUBLE_EQ(one_bad.good_fraction, 0.0);
  EXPECT_EQ(error_of([] { qc::split_stats(qc::DatasetSplit{}); }).code(), qc::ErrorCode::EmptySplit);

  EXPECT_EQ(qc::format_split_stats({25000, 0.42, 10500}), "25k (42%)");
  EXPECT_EQ(qc::format_split_stats({23000, 0.14, 3220}), "23k (14%)");
  EXPECT_EQ(qc::format_split_stats({1000, 0.09, 90}), "1k (9%)");
  EXPECT_EQ(qc::format_split_stats({1999, 0.445, 889}), "2k (45%)");
  EXPECT_EQ(qc::format_split_stats({4, 0.5, 2}), "4 (50%)");
}

qc::DatasetSplit random_labeled(qc::Rng& rng, std::size_t n) {
  const std::vector<std::string> words{"der", "hund", "the", "dog", "ünïcode", "a,b", "x.", "\"q\""};
  qc::QESplit split;
  for (std::size_t i = 0; i < n; ++i) {
    qc::QESample s;
    s.id = i;
    for (std::size_t k = 0, len = 1 + rng.below(6); k < len; ++k) s.source.push_back(words[rng.below(words.size())]);
    for (std::size_t k = 0, len = 1 + rng.below(6); k < len; ++k) s.target.push_back(words[rng.below(words.size())]);
    s.hter = rng.bernoulli(0.3) ? 0.0 : std::round(rng.uniform(0.0, 1.5) * 1e6) / 1e6;
    split.samples.push_back(s);
  }
  return qc::derive_labels(split);
}

TEST(TsvTest, RoundTripIsIdentity) {
  qc::Rng rng(17);
  TempDir dir;
  for (int trial = 0; trial < 20; ++trial) {
    auto split = random_labeled(rng, 1 + rng.below(40));
    split.name = qc::SplitName::test;
    split.language_pair = "en-de";
    EXPECT_EQ(qc::parse_qc_tsv(qc::qc_tsv_string(split), split.name, split.language_pair), split);
    const auto path = dir.write("split.tsv", "");
    qc::write_qc_tsv(split, path);
    EXPECT_EQ(qc::read_qc_tsv(path, split.name, split.language_pair), split);
  }
}

TEST(TsvTest, MalformedRows) {
  const std::string header = "id\tsource\ttarget\thter\tlabel\n";
  const auto maybe = error_of([&] { qc::parse_qc_tsv(header + "0\ta\tb\t0.000000\tmaybe\n"); });
  EXPECT_EQ(maybe.code(), qc::ErrorCode::ParseError);
  EXPECT_EQ(maybe.line(), 2u);
  const auto columns = error_of([&] { qc::parse_qc_tsv(header + "0\ta\tb\t0.000000\tgood\n1\ta\tb\tgood\n"); });
  EXPECT_EQ(columns.code(), qc::ErrorCode::ParseError);
  EXPECT_EQ(columns.line(), 3u);
  EXPECT_EQ(error_of([&] { qc::parse_qc_tsv("bogus\n0\ta\tb\t0\tgood\n"); }).code(), qc::ErrorCode::ParseError);
  EXPECT_EQ(error_of([&] { qc::parse_qc_tsv(header); }).code(), qc::ErrorCode::EmptySplit);
  EXPECT_EQ(error_of([&] { qc::parse_qc_tsv(""); }).code(), qc::ErrorCode::EmptySplit);
}

TEST(DecimalTest, StrictParsing) {
  EXPECT_EQ(qc::parse_decimal("0.25", 1), 0.25);
  EXPECT_EQ(qc::parse_decimal(" 1.0 ", 1), 1.0);
  EXPECT_EQ(qc::parse_decimal("2e-3", 1), 0.002);
  for (const char* bad : {"", "abc", "0.1x", "0,5", "nan"}) {
    EXPECT_EQ(error_of([&] { qc::parse_decimal(bad, 4); }).code(), qc::ErrorCode::ParseError) << bad;
  }
}

}  // namespace
