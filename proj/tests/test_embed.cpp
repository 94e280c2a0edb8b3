#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "ytlc/embed.hpp"

using namespace ytlc;

namespace {

std::vector<TitleRecord> make_records(const std::vector<std::string>& titles) {
  std::vector<TitleRecord> out;
  for (std::size_t i = 0; i < titles.size(); ++i) {
    TitleRecord r;
    r.video_id = "v" + std::to_string(i);
    r.channel_id = "c";
    r.title = titles[i];
    out.push_back(std::move(r));
  }
  return out;
}

double cosine(const TensorF& m, int a, int b) {
  double dot = 0, na = 0, nb = 0;
  for (long j = 0; j < m.dim(1); ++j) {
    double x = m(a, j), y = m(b, j);
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  return dot / (std::sqrt(na) * std::sqrt(nb) + 1e-12);
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/ytlc_embed_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("init_random: zero pad row, target variance, determinism") {
  std::vector<std::string> titles;
  for (int i = 0; i < 3000; ++i) titles.push_back("tok" + std::to_string(i));
  auto vocab = build_word_vocab(make_records(titles), 3000);
  auto m = init_random(vocab, 50, 123);

  REQUIRE(m.matrix.dim(0) == vocab.size());
  REQUIRE(m.matrix.dim(1) == 50);
  CHECK(m.dim == 50);
  CHECK(m.source == EmbedSource::Random);
  for (long j = 0; j < 50; ++j) CHECK(m.matrix(WordVocab::kPad, j) == 0.0f);

  double sum = 0, sq = 0;
  long n = 0;
  for (long r = 1; r < m.matrix.dim(0); ++r)
    for (long j = 0; j < 50; ++j) {
      double x = m.matrix(r, j);
      sum += x;
      sq += x * x;
      ++n;
    }
  double mean = sum / static_cast<double>(n);
  double var = sq / static_cast<double>(n) - mean * mean;
  CHECK(std::abs(mean) < 1e-4);
  CHECK(var == doctest::Approx(1e-4).epsilon(0.10));  // stddev 0.01

  auto again = init_random(vocab, 50, 123);
  for (long i = 0; i < m.matrix.numel(); ++i)
    CHECK(again.matrix(i) == m.matrix(i));
  auto other = init_random(vocab, 50, 124);
  bool differs = false;
  for (long i = 0; i < m.matrix.numel() && !differs; ++i)
    differs = other.matrix(i) != m.matrix(i);
  CHECK(differs);
}

TEST_CASE("save_vectors / load_vectors round trip bit-exactly") {
  auto vocab = build_word_vocab(
      make_records({"alpha beta gamma", "beta gamma", "gamma"}), 100);
  auto m = init_random(vocab, 8, 7);
  TempFile f("roundtrip.vec");
  save_vectors(m, vocab, f.path);

  auto loaded = load_vectors(f.path, vocab, 8, 7);
  CHECK(loaded.source == EmbedSource::Loaded);
  CHECK(loaded.coverage == doctest::Approx(1.0));
  for (long i = 0; i < m.matrix.numel(); ++i)
    CHECK(loaded.matrix(i) == m.matrix(i));
}

TEST_CASE("load_vectors: uncovered rows fall back to seeded init") {
  auto vocab =
      build_word_vocab(make_records({"apple orange pear", "apple orange"}), 10);
  TempFile f("partial.vec");
  {
    std::ofstream out(f.path);
    out << "1 4\n";
    out << "apple 1.5 -0.25 0 3\n";
  }
  auto loaded = load_vectors(f.path, vocab, 4, 99);
  auto fallback = init_random(vocab, 4, 99);

  int apple = vocab.lookup("apple");
  CHECK(loaded.matrix(apple, 0) == 1.5f);
  CHECK(loaded.matrix(apple, 1) == -0.25f);
  CHECK(loaded.coverage == doctest::Approx(1.0 / 3.0));
  for (const char* tok : {"orange", "pear"}) {
    int id = vocab.lookup(tok);
    for (long j = 0; j < 4; ++j)
      CHECK(loaded.matrix(id, j) == fallback.matrix(id, j));
  }
  for (long j = 0; j < 4; ++j) CHECK(loaded.matrix(WordVocab::kPad, j) == 0.0f);
}

TEST_CASE("load_vectors: dimension mismatch names the offending line") {
  auto vocab = build_word_vocab(make_records({"apple"}), 10);
  TempFile f("badline.vec");
  {
    std::ofstream out(f.path);
    out << "apple 1.0 2.0\n";
  }
  try {
    load_vectors(f.path, vocab, 3, 0);
    FAIL("expected a dimension mismatch error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find('1') != std::string::npos);
  }
}

TEST_CASE("sgns noise distribution: unigram^0.75, specials zero, sums to 1") {
  // "hot" appears 16x, "cold" 1x -> probability ratio 16^0.75 = 8.
  std::vector<std::string> titles(16, "hot");
  titles.push_back("cold");
  auto vocab = build_word_vocab(make_records(titles), 10);
  auto dist = sgns_noise_distribution(vocab);

  REQUIRE(dist.size() == static_cast<std::size_t>(vocab.size()));
  CHECK(dist[WordVocab::kPad] == 0.0);
  CHECK(dist[WordVocab::kUnk] == 0.0);
  double total = 0;
  for (double p : dist) {
    CHECK(p >= 0);
    total += p;
  }
  CHECK(total == doctest::Approx(1.0));
  int hot = vocab.lookup("hot"), cold = vocab.lookup("cold");
  CHECK(dist[static_cast<std::size_t>(hot)] /
            dist[static_cast<std::size_t>(cold)] ==
        doctest::Approx(8.0).epsilon(1e-6));
}

TEST_CASE("sgns_pretrain with epochs=0 is the random init") {
  auto records = make_records({"one two three", "two three four"});
  auto vocab = build_word_vocab(records, 50);
  auto trained = sgns_pretrain(records, vocab, 12, 2, 3, 0, 0.05, 42);
  auto fresh = init_random(vocab, 12, 42);
  CHECK(trained.source == EmbedSource::Random);
  for (long i = 0; i < fresh.matrix.numel(); ++i)
    CHECK(trained.matrix(i) == fresh.matrix(i));
}

TEST_CASE("sgns_pretrain is deterministic per seed and keeps pad at zero") {
  auto records = make_records(
      {"market rally stocks", "stocks market rally", "rain storm cloud"});
  auto vocab = build_word_vocab(records, 50);
  auto a = sgns_pretrain(records, vocab, 8, 2, 4, 3, 0.05, 5);
  auto b = sgns_pretrain(records, vocab, 8, 2, 4, 3, 0.05, 5);
  auto c = sgns_pretrain(records, vocab, 8, 2, 4, 3, 0.05, 6);
  CHECK(a.source == EmbedSource::PretrainedLocal);
  for (long i = 0; i < a.matrix.numel(); ++i) CHECK(a.matrix(i) == b.matrix(i));
  bool differs = false;
  for (long i = 0; i < a.matrix.numel() && !differs; ++i)
    differs = a.matrix(i) != c.matrix(i);
  CHECK(differs);
  for (long j = 0; j < 8; ++j) CHECK(a.matrix(WordVocab::kPad, j) == 0.0f);
}

TEST_CASE("sgns_pretrain separates co-occurrence clusters (median of 5)") {
  // Two disjoint topics; words only ever co-occur within their own topic.
  std::vector<std::string> titles;
  for (int i = 0; i < 120; ++i) {
    titles.push_back(i % 2 ? "apple banana cherry" : "banana apple cherry");
    titles.push_back(i % 2 ? "stone metal gravel" : "metal stone gravel");
  }
  auto records = make_records(titles);
  auto vocab = build_word_vocab(records, 50);
  int apple = vocab.lookup("apple"), banana = vocab.lookup("banana");
  int stone = vocab.lookup("stone"), metal = vocab.lookup("metal");
  REQUIRE(apple != WordVocab::kUnk);
  REQUIRE(stone != WordVocab::kUnk);

  std::vector<double> margins;
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    auto m = sgns_pretrain(records, vocab, 16, 2, 5, 8, 0.05, seed);
    double in_a = cosine(m.matrix, apple, banana);
    double in_b = cosine(m.matrix, stone, metal);
    double cross = cosine(m.matrix, apple, stone);
    margins.push_back(std::min(in_a, in_b) - cross);
  }
  std::sort(margins.begin(), margins.end());
  CHECK(margins[2] > 0.1);  // median margin clearly positive
}
