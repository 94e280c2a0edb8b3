#include "ytlc/tokenize.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "ytlc/unicode.hpp"

namespace ytlc {

namespace {

constexpr int kMaxWordChars = 64;  // longer words become [UNK]

std::uint64_t fnv1a(std::uint64_t h, std::string_view s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  h ^= '\n';
  h *= 0x100000001b3ULL;
  return h;
}

std::vector<std::string> whitespace_words(std::string_view title) {
  auto cps = uni::decode_utf8(uni::lowercase(title));
  std::vector<std::string> words;
  std::string cur;
  for (char32_t cp : cps) {
    if (uni::is_space(cp)) {
      if (!cur.empty()) words.push_back(std::move(cur)), cur.clear();
    } else {
      uni::append_utf8(cur, cp);
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

}  // namespace

std::vector<std::string> word_tokens(std::string_view title) {
  auto cps = uni::decode_utf8(uni::lowercase(title));
  std::vector<std::string> words;
  std::string cur;
  for (char32_t cp : cps) {
    if (uni::is_space(cp) || uni::is_punct_or_symbol(cp)) {
      if (!cur.empty()) words.push_back(std::move(cur)), cur.clear();
    } else {
      uni::append_utf8(cur, cp);
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

std::uint64_t WordVocab::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a(h, "word");
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    h = fnv1a(h, tokens[i]);
    h = fnv1a(h, std::to_string(frequency[i]));
  }
  return h;
}

WordVocab build_word_vocab(const std::vector<TitleRecord>& records,
                           int max_size) {
  if (max_size < 2) throw TokenizeError("word vocab max_size must be >= 2");
  std::unordered_map<std::string, long> freq;
  for (const auto& r : records)
    for (auto& tok : word_tokens(r.title)) ++freq[tok];

  std::vector<std::pair<std::string, long>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  WordVocab v;
  v.max_size = max_size;
  v.tokens = {"<pad>", "<unk>"};
  v.frequency = {0, 0};
  for (const auto& [tok, f] : ranked) {
    if (v.size() >= max_size) break;
    v.tokens.push_back(tok);
    v.frequency.push_back(f);
  }
  for (int i = 0; i < v.size(); ++i) v.index[v.tokens[static_cast<std::size_t>(i)]] = i;
  return v;
}

void save_word_vocab(const WordVocab& v, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw TokenizeError("cannot write vocab file: " + path);
  // Specials are implicit; only real tokens are serialized.
  for (int i = 2; i < v.size(); ++i)
    out << v.tokens[static_cast<std::size_t>(i)] << '\t'
        << v.frequency[static_cast<std::size_t>(i)] << '\n';
}

WordVocab load_word_vocab(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TokenizeError("cannot open vocab file: " + path);
  WordVocab v;
  v.tokens = {"<pad>", "<unk>"};
  v.frequency = {0, 0};
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw TokenizeError("vocab line " + std::to_string(lineno) +
                          ": expected token TAB frequency");
    v.tokens.push_back(line.substr(0, tab));
    v.frequency.push_back(std::stol(line.substr(tab + 1)));
  }
  v.max_size = v.size();
  for (int i = 0; i < v.size(); ++i) {
    if (!v.index.emplace(v.tokens[static_cast<std::size_t>(i)], i).second)
      throw TokenizeError("duplicate vocab token: " +
                          v.tokens[static_cast<std::size_t>(i)]);
  }
  return v;
}

TokenSequence encode_words(std::string_view title, const WordVocab& vocab,
                           int max_len) {
  TokenSequence seq;
  seq.ids.assign(static_cast<std::size_t>(max_len), WordVocab::kPad);
  seq.attention_mask.assign(static_cast<std::size_t>(max_len), 0);
  auto words = word_tokens(title);
  int n = std::min<int>(static_cast<int>(words.size()), max_len);
  for (int i = 0; i < n; ++i) {
    seq.ids[static_cast<std::size_t>(i)] =
        vocab.lookup(words[static_cast<std::size_t>(i)]);
    seq.attention_mask[static_cast<std::size_t>(i)] = 1;
  }
  seq.real_length = n;
  return seq;
}

std::uint64_t WordPieceVocab::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a(h, "wordpiece");
  for (const auto& t : tokens) h = fnv1a(h, t);
  return h;
}

namespace {

std::vector<std::string> word_to_symbols(const std::string& word) {
  auto cps = uni::decode_utf8(word);
  std::vector<std::string> syms;
  syms.reserve(cps.size());
  for (std::size_t i = 0; i < cps.size(); ++i) {
    std::string s = i == 0 ? "" : "##";
    uni::append_utf8(s, cps[i]);
    syms.push_back(std::move(s));
  }
  return syms;
}

std::string merge_symbols(const std::string& left, const std::string& right) {
  std::string_view r = right;
  if (r.starts_with("##")) r.remove_prefix(2);
  return left + std::string(r);
}

}  // namespace

WordPieceVocab build_wordpiece_vocab(const std::vector<TitleRecord>& records,
                                     int target_size) {
  // Word type -> count.
  std::map<std::string, long> word_counts;
  for (const auto& r : records)
    for (auto& w : whitespace_words(r.title)) ++word_counts[w];

  std::vector<std::vector<std::string>> words;
  std::vector<long> counts;
  for (const auto& [w, c] : word_counts) {
    words.push_back(word_to_symbols(w));
    counts.push_back(c);
  }

  // Initial alphabet: every symbol seen, lexicographically ordered.
  std::set<std::string> alphabet;
  for (const auto& w : words)
    for (const auto& s : w) alphabet.insert(s);

  WordPieceVocab v;
  v.tokens = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
  if (target_size < static_cast<int>(v.tokens.size() + alphabet.size()))
    throw TokenizeError("wordpiece target_size too small for alphabet (need " +
                        std::to_string(v.tokens.size() + alphabet.size()) +
                        ")");
  for (const auto& s : alphabet) v.tokens.push_back(s);
  std::unordered_set<std::string> have(v.tokens.begin(), v.tokens.end());

  using Pair = std::pair<std::string, std::string>;
  std::map<Pair, long> pair_counts;
  std::map<Pair, std::set<std::size_t>> pair_words;
  auto add_word_pairs = [&](std::size_t wi, long sign) {
    const auto& w = words[wi];
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
      Pair p{w[i], w[i + 1]};
      pair_counts[p] += sign * counts[wi];
      if (sign > 0)
        pair_words[p].insert(wi);
    }
  };
  for (std::size_t wi = 0; wi < words.size(); ++wi) add_word_pairs(wi, +1);

  while (static_cast<int>(v.tokens.size()) < target_size) {
    // Highest count, ties to the lexicographically smallest pair. The map is
    // already pair-ordered, so a linear scan keeping strict improvement gives
    // that tie-break.
    Pair best;
    long best_count = 0;
    for (const auto& [p, c] : pair_counts) {
      if (c > best_count) {
        best = p;
        best_count = c;
      }
    }
    if (best_count <= 0) break;

    std::string merged = merge_symbols(best.first, best.second);
    // Distinct merge paths can yield the same string ("a"+"##bc" vs
    // "ab"+"##c"); the vocab keeps one row.
    if (have.insert(merged).second) v.tokens.push_back(merged);

    auto affected = pair_words[best];  // copy; mutation below invalidates
    for (std::size_t wi : affected) {
      auto& w = words[wi];
      // Remove this word's old pair contributions.
      for (std::size_t i = 0; i + 1 < w.size(); ++i) {
        Pair p{w[i], w[i + 1]};
        pair_counts[p] -= counts[wi];
        pair_words[p].erase(wi);
      }
      std::vector<std::string> nw;
      nw.reserve(w.size());
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (i + 1 < w.size() && w[i] == best.first && w[i + 1] == best.second) {
          nw.push_back(merged);
          ++i;
        } else {
          nw.push_back(w[i]);
        }
      }
      w = std::move(nw);
      add_word_pairs(wi, +1);
    }
    // Drop exhausted entries so the scan stays tight.
    std::erase_if(pair_counts, [](const auto& kv) { return kv.second <= 0; });
  }

  for (int i = 0; i < v.size(); ++i)
    v.index[v.tokens[static_cast<std::size_t>(i)]] = i;
  return v;
}

void save_wordpiece_vocab(const WordPieceVocab& v, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw TokenizeError("cannot write vocab file: " + path);
  for (const auto& t : v.tokens) out << t << '\n';
}

WordPieceVocab load_wordpiece_vocab(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TokenizeError("cannot open vocab file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();

  WordPieceVocab v;
  // A file whose first row is a bracketed special carries its own special
  // rows verbatim; otherwise the four specials are prepended.
  bool self_contained = !lines.empty() && lines.front().size() >= 2 &&
                        lines.front().front() == '[' &&
                        lines.front().back() == ']';
  if (!self_contained) v.tokens = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
  long offset = static_cast<long>(v.tokens.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty())
      throw TokenizeError("vocab line " + std::to_string(i + 1) + ": empty");
    v.tokens.push_back(lines[i]);
  }
  for (int i = 0; i < v.size(); ++i) {
    if (!v.index.emplace(v.tokens[static_cast<std::size_t>(i)], i).second) {
      long lineno = static_cast<long>(i) - offset + 1;
      throw TokenizeError("duplicate vocab token at line " +
                          std::to_string(lineno) + ": " +
                          v.tokens[static_cast<std::size_t>(i)]);
    }
  }
  auto find_or = [&](const char* tok, int fallback) {
    auto it = v.index.find(tok);
    return it == v.index.end() ? fallback : it->second;
  };
  v.pad_id = find_or("[PAD]", WordPieceVocab::kPad);
  v.unk_id = find_or("[UNK]", WordPieceVocab::kUnk);
  v.cls_id = find_or("[CLS]", WordPieceVocab::kCls);
  v.sep_id = find_or("[SEP]", WordPieceVocab::kSep);
  return v;
}

TokenSequence wordpiece_encode(std::string_view title,
                               const WordPieceVocab& vocab, int max_len) {
  std::vector<int> pieces;
  for (const auto& word : whitespace_words(title)) {
    auto cps = uni::decode_utf8(word);
    if (static_cast<int>(cps.size()) > kMaxWordChars) {
      pieces.push_back(vocab.unk_id);
      continue;
    }
    std::vector<int> word_pieces;
    std::size_t start = 0;
    bool bad = false;
    while (start < cps.size()) {
      int found = -1;
      // Longest match first.
      for (std::size_t end = cps.size(); end > start; --end) {
        std::string cand = start > 0 ? "##" : "";
        for (std::size_t i = start; i < end; ++i) uni::append_utf8(cand, cps[i]);
        auto it = vocab.index.find(cand);
        if (it != vocab.index.end()) {
          found = it->second;
          start = end;
          break;
        }
      }
      if (found < 0) {
        bad = true;
        break;
      }
      word_pieces.push_back(found);
    }
    if (bad)
      pieces.push_back(vocab.unk_id);
    else
      pieces.insert(pieces.end(), word_pieces.begin(), word_pieces.end());
  }

  TokenSequence seq;
  seq.ids.assign(static_cast<std::size_t>(max_len), vocab.pad_id);
  seq.attention_mask.assign(static_cast<std::size_t>(max_len), 0);
  // [CLS] and [SEP] count toward max_len; content is truncated so [SEP]
  // always fits.
  int content = std::min<int>(static_cast<int>(pieces.size()), max_len - 2);
  int pos = 0;
  seq.ids[static_cast<std::size_t>(pos++)] = vocab.cls_id;
  for (int i = 0; i < content; ++i)
    seq.ids[static_cast<std::size_t>(pos++)] =
        pieces[static_cast<std::size_t>(i)];
  seq.ids[static_cast<std::size_t>(pos++)] = vocab.sep_id;
  seq.real_length = pos;
  for (int i = 0; i < pos; ++i) seq.attention_mask[static_cast<std::size_t>(i)] = 1;
  return seq;
}

std::string decode(const TokenSequence& seq, const WordPieceVocab& vocab) {
  std::string out;
  for (int i = 0; i < seq.real_length; ++i) {
    int id = seq.ids[static_cast<std::size_t>(i)];
    if (id < 0 || id >= vocab.size())
      throw TokenizeError("token id out of range: " + std::to_string(id));
    if (id == vocab.pad_id || id == vocab.cls_id || id == vocab.sep_id)
      continue;
    const std::string& tok = vocab.tokens[static_cast<std::size_t>(id)];
    if (tok.starts_with("##")) {
      out += tok.substr(2);
    } else {
      if (!out.empty()) out += ' ';
      out += tok;
    }
  }
  return out;
}

}  // namespace ytlc
