#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "ytlc/rng.hpp"
#include "ytlc/tokenize.hpp"

using namespace ytlc;
namespace fs = std::filesystem;

namespace {

TitleRecord rec(const std::string& title) {
  TitleRecord r;
  r.video_id = "v";
  r.channel_id = "c";
  r.title = title;
  return r;
}

std::string temp_file(const std::string& name, const std::string& content) {
  auto path = (fs::temp_directory_path() / name).string();
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

WordPieceVocab passthrough_vocab(const std::vector<std::string>& extra) {
  std::string content = "[PAD]\n[UNK]\n[CLS]\n[SEP]\n";
  for (const auto& t : extra) content += t + "\n";
  auto path = temp_file("wp_pass.vocab", content);
  return load_wordpiece_vocab(path);
}

// Independent greedy longest-match segmenter for the oracle comparison.
std::vector<std::string> oracle_segment(const std::string& word,
                                        const WordPieceVocab& v) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < word.size()) {
    std::size_t best = 0;
    std::string best_piece;
    for (std::size_t len = word.size() - pos; len >= 1; --len) {
      std::string cand = word.substr(pos, len);
      if (pos > 0) cand = "##" + cand;
      if (v.index.count(cand)) {
        best = len;
        best_piece = cand;
        break;
      }
    }
    if (best == 0) return {};  // unmatchable
    out.push_back(best_piece);
    pos += best;
  }
  return out;
}

}  // namespace

TEST_CASE("word_tokens lowercases and splits on space and punctuation") {
  auto t = word_tokens("Breaking: Trump's WIN, explained!");
  REQUIRE(t.size() == 5);
  CHECK(t[0] == "breaking");
  CHECK(t[1] == "trump");
  CHECK(t[2] == "s");
  CHECK(t[3] == "win");
  CHECK(t[4] == "explained");
}

TEST_CASE("word_tokens drops punctuation-only runs") {
  auto t = word_tokens("hello --- world!!!");
  REQUIRE(t.size() == 2);
  CHECK(t[0] == "hello");
  CHECK(t[1] == "world");
  CHECK(word_tokens("???").empty());
  CHECK(word_tokens("").empty());
}

TEST_CASE("build_word_vocab ranks by frequency then lexicographic") {
  auto v = build_word_vocab({rec("a b"), rec("b c")}, 4);
  REQUIRE(v.size() == 4);
  CHECK(v.lookup("b") == 2);  // freq 2 outranks
  CHECK(v.lookup("a") == 3);  // beats "c" lexicographically at freq 1
  CHECK(v.lookup("c") == WordVocab::kUnk);
  CHECK(v.frequency[2] == 2);
  CHECK(v.frequency[3] == 1);
}

TEST_CASE("build_word_vocab degenerate cases") {
  auto empty = build_word_vocab({}, 100);
  CHECK(empty.size() == 2);
  auto specials = build_word_vocab({rec("x y z")}, 2);
  CHECK(specials.size() == 2);
  CHECK(specials.lookup("x") == WordVocab::kUnk);
}

TEST_CASE("word vocab save/load round trip") {
  auto v = build_word_vocab({rec("one two two three three three")}, 10);
  auto path = (fs::temp_directory_path() / "word.vocab").string();
  save_word_vocab(v, path);
  auto w = load_word_vocab(path);
  CHECK(w.tokens == v.tokens);
  CHECK(w.frequency == v.frequency);
  CHECK(w.fingerprint() == v.fingerprint());
}

TEST_CASE("encode_words pads, masks, and truncates") {
  auto v = build_word_vocab({rec("a b"), rec("b c")}, 4);

  auto s = encode_words("b a", v, 4);
  CHECK(s.ids == std::vector<int>{2, 3, 0, 0});
  CHECK(s.attention_mask == std::vector<std::uint8_t>{1, 1, 0, 0});
  CHECK(s.real_length == 2);

  auto empty = encode_words("", v, 4);
  CHECK(empty.ids == std::vector<int>{0, 0, 0, 0});
  CHECK(empty.real_length == 0);

  std::string long_title;
  for (int i = 0; i < 150; ++i) long_title += "b ";
  auto trunc = encode_words(long_title, v, 100);
  CHECK(trunc.real_length == 100);
  CHECK(static_cast<int>(trunc.ids.size()) == 100);
  CHECK(trunc.ids[99] == 2);
}

TEST_CASE("wordpiece fixture: the president election") {
  auto v = passthrough_vocab({"the", "presid", "##ent", "elect", "##ion"});
  auto s = wordpiece_encode("the president election", v, 12);
  // [CLS] the presid ##ent elect ##ion [SEP]
  std::vector<int> want = {2, 4, 5, 6, 7, 8, 3, 0, 0, 0, 0, 0};
  CHECK(s.ids == want);
  CHECK(s.real_length == 7);
  CHECK(s.attention_mask ==
        std::vector<std::uint8_t>{1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0});
  CHECK(decode(s, v) == "the president election");
}

TEST_CASE("wordpiece_encode degenerate cases") {
  auto v = passthrough_vocab({"ab", "##cd", "a", "##b"});
  auto empty = wordpiece_encode("", v, 6);
  CHECK(empty.ids == std::vector<int>{2, 3, 0, 0, 0, 0});
  CHECK(empty.real_length == 2);
  CHECK(decode(empty, v).empty());

  // a word containing a character absent from the vocab becomes one [UNK]
  auto unk = wordpiece_encode("abzz", v, 6);
  CHECK(unk.ids == std::vector<int>{2, 1, 3, 0, 0, 0});

  // words longer than 64 characters go straight to [UNK]
  std::string monster(70, 'a');
  auto capped = wordpiece_encode(monster, v, 6);
  CHECK(capped.ids[1] == v.unk_id);
}

TEST_CASE("wordpiece truncation always keeps [SEP]") {
  auto v = passthrough_vocab({"a", "##a"});
  auto s = wordpiece_encode("aaaa aaaa aaaa", v, 6);
  CHECK(static_cast<int>(s.ids.size()) == 6);
  CHECK(s.ids.front() == v.cls_id);
  CHECK(s.ids[5] == v.sep_id);
  CHECK(s.real_length == 6);
}

TEST_CASE("load_wordpiece_vocab offsets plain files by the four specials") {
  auto path = temp_file("wp_plain.vocab", "the\npresid\n##ent\n");
  auto v = load_wordpiece_vocab(path);
  CHECK(v.lookup("the") == 4);
  CHECK(v.lookup("presid") == 5);
  CHECK(v.lookup("##ent") == 6);
  CHECK(v.pad_id == 0);
  CHECK(v.cls_id == 2);
}

TEST_CASE("load_wordpiece_vocab passthrough takes specials from the file") {
  auto path = temp_file("wp_custom.vocab", "[CLS]\n[PAD]\n[SEP]\n[UNK]\nx\n");
  auto v = load_wordpiece_vocab(path);
  CHECK(v.cls_id == 0);
  CHECK(v.pad_id == 1);
  CHECK(v.sep_id == 2);
  CHECK(v.unk_id == 3);
  CHECK(v.lookup("x") == 4);
}

TEST_CASE("load_wordpiece_vocab rejects duplicate lines") {
  auto path = temp_file("wp_dup.vocab", "aa\nbb\naa\n");
  try {
    load_wordpiece_vocab(path);
    FAIL("expected TokenizeError");
  } catch (const TokenizeError& e) {
    CHECK(std::string(e.what()).find("3") != std::string::npos);
  }
}

TEST_CASE("build_wordpiece_vocab learns merges on the low/lowest corpus") {
  std::vector<TitleRecord> corpus;
  for (int i = 0; i < 20; ++i) corpus.push_back(rec("low low lowest"));
  auto v = build_wordpiece_vocab(corpus, 40);
  CHECK(v.index.count("low"));
  CHECK(v.index.count("##est"));
}

TEST_CASE("build_wordpiece_vocab character-level floor and determinism") {
  std::vector<TitleRecord> corpus = {rec("ab ba")};
  // alphabet is {a, b, ##a, ##b}; 4 specials + 4 pieces, no room for merges
  auto v = build_wordpiece_vocab(corpus, 8);
  CHECK(v.size() == 8);
  CHECK_FALSE(v.index.count("ab"));

  auto v1 = build_wordpiece_vocab(corpus, 12);
  auto v2 = build_wordpiece_vocab(corpus, 12);
  CHECK(v1.tokens == v2.tokens);
}

TEST_CASE("wordpiece vocab save/load round trip") {
  std::vector<TitleRecord> corpus;
  for (int i = 0; i < 10; ++i) corpus.push_back(rec("alpha beta alphabet"));
  auto v = build_wordpiece_vocab(corpus, 30);
  auto path = (fs::temp_directory_path() / "wp_rt.vocab").string();
  save_wordpiece_vocab(v, path);
  auto w = load_wordpiece_vocab(path);
  CHECK(w.tokens == v.tokens);
  CHECK(w.fingerprint() == v.fingerprint());
}

TEST_CASE("greedy longest-match agrees with a brute-force oracle") {
  Rng rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    // random piece vocab over {a, b, c}
    std::vector<std::string> pieces;
    for (int i = 0; i < 12; ++i) {
      std::string p;
      std::size_t len = 1 + rng.below(3);
      for (std::size_t k = 0; k < len; ++k)
        p.push_back(static_cast<char>('a' + rng.below(3)));
      if (rng.below(2)) p = "##" + p;
      pieces.push_back(p);
    }
    // ensure single characters exist so most words are matchable
    for (char c : {'a', 'b', 'c'}) {
      pieces.push_back(std::string(1, c));
      pieces.push_back("##" + std::string(1, c));
    }
    std::sort(pieces.begin(), pieces.end());
    pieces.erase(std::unique(pieces.begin(), pieces.end()), pieces.end());
    WordPieceVocab v = passthrough_vocab(pieces);

    std::string word;
    std::size_t wlen = 1 + rng.below(8);
    for (std::size_t k = 0; k < wlen; ++k)
      word.push_back(static_cast<char>('a' + rng.below(3)));

    auto seq = wordpiece_encode(word, v, 32);
    auto want = oracle_segment(word, v);
    std::vector<std::string> got;
    for (int id : seq.ids) {
      if (id == v.pad_id || id == v.cls_id || id == v.sep_id) continue;
      if (id == v.unk_id) {
        got.clear();
        break;
      }
      got.push_back(v.tokens[static_cast<std::size_t>(id)]);
    }
    CHECK(got == want);
  }
}

TEST_CASE("mask/padding invariants hold over random titles and lengths") {
  Rng rng(88);
  auto word_vocab = build_word_vocab(
      {rec("alpha beta gamma delta epsilon"), rec("zeta eta theta")}, 12);
  auto wp = passthrough_vocab({"al", "##pha", "be", "##ta", "x", "##x"});

  int cases = 0;
  for (int trial = 0; trial < 2500; ++trial) {
    std::string title;
    std::size_t words = rng.below(12);
    for (std::size_t w = 0; w < words; ++w) {
      std::size_t len = 1 + rng.below(6);
      for (std::size_t k = 0; k < len; ++k)
        title.push_back(static_cast<char>('a' + rng.below(26)));
      title.push_back(' ');
    }
    int max_len = 4 + static_cast<int>(rng.below(125));

    for (int kind = 0; kind < 2; ++kind) {
      TokenSequence s = kind == 0 ? encode_words(title, word_vocab, max_len)
                                  : wordpiece_encode(title, wp, max_len);
      REQUIRE(static_cast<int>(s.ids.size()) == max_len);
      REQUIRE(static_cast<int>(s.attention_mask.size()) == max_len);
      REQUIRE(s.real_length <= max_len);
      int pad = kind == 0 ? WordVocab::kPad : wp.pad_id;
      for (int i = 0; i < max_len; ++i) {
        if (i < s.real_length) {
          CHECK(s.attention_mask[static_cast<std::size_t>(i)] == 1);
        } else {
          CHECK(s.attention_mask[static_cast<std::size_t>(i)] == 0);
          CHECK(s.ids[static_cast<std::size_t>(i)] == pad);
        }
      }
      ++cases;
    }
  }
  CHECK(cases == 5000);
}

TEST_CASE("word-vocab ranking matches brute-force frequency counting") {
  Rng rng(99);
  std::vector<TitleRecord> corpus;
  std::map<std::string, long> freq;
  for (int i = 0; i < 400; ++i) {
    std::string title;
    for (int w = 0; w < 5; ++w) {
      std::string word(1 + rng.below(3), 'a');
      word[0] = static_cast<char>('a' + rng.below(8));
      title += word + " ";
      freq[word]++;
    }
    corpus.push_back(rec(title));
  }
  auto v = build_word_vocab(corpus, 1000);
  std::vector<std::pair<std::string, long>> want(freq.begin(), freq.end());
  std::sort(want.begin(), want.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  REQUIRE(v.size() == static_cast<int>(want.size()) + 2);
  for (std::size_t i = 0; i < want.size(); ++i) {
    CHECK(v.tokens[i + 2] == want[i].first);
    CHECK(v.frequency[i + 2] == want[i].second);
  }
}

TEST_CASE("decode rejects out-of-range ids") {
  auto v = passthrough_vocab({"x"});
  TokenSequence s;
  s.ids = {2, 99, 3};
  s.attention_mask = {1, 1, 1};
  s.real_length = 3;
  CHECK_THROWS_AS(decode(s, v), TokenizeError);
}
