#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ytlc/corpus.hpp"

namespace ytlc {

/// Fixed-length token window. ids beyond real_length are PAD with mask 0.
struct TokenSequence {
  std::vector<int> ids;
  std::vector<std::uint8_t> attention_mask;
  int real_length = 0;
};

/// Lowercases and splits a title into word-level tokens. Whitespace and
/// Unicode punctuation/symbol characters act as delimiters and are dropped.
std::vector<std::string> word_tokens(std::string_view title);

/// Capped word-level vocabulary, frequency-ranked.
struct WordVocab {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  std::vector<std::string> tokens;  // index -> token; [0]=<pad>, [1]=<unk>
  std::unordered_map<std::string, int> index;
  std::vector<long> frequency;  // aligned with tokens; 0 for specials
  int max_size = 0;

  int size() const { return static_cast<int>(tokens.size()); }
  int lookup(const std::string& tok) const {
    auto it = index.find(tok);
    return it == index.end() ? kUnk : it->second;
  }
  std::uint64_t fingerprint() const;
};

WordVocab build_word_vocab(const std::vector<TitleRecord>& records,
                           int max_size);
void save_word_vocab(const WordVocab& v, const std::string& path);
WordVocab load_word_vocab(const std::string& path);

TokenSequence encode_words(std::string_view title, const WordVocab& vocab,
                           int max_len = 100);

/// WordPiece subword vocabulary. Continuation pieces carry the "##" prefix.
struct WordPieceVocab {
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;

  std::vector<std::string> tokens;
  std::unordered_map<std::string, int> index;
  // Actual special indices; differ from the constants only for vocab files
  // that carry their own special rows.
  int pad_id = kPad;
  int unk_id = kUnk;
  int cls_id = kCls;
  int sep_id = kSep;

  int size() const { return static_cast<int>(tokens.size()); }
  int lookup(const std::string& tok) const {
    auto it = index.find(tok);
    return it == index.end() ? unk_id : it->second;
  }
  std::uint64_t fingerprint() const;
};

/// Greedy pair-merge (BPE-style) induction over whitespace-split lowercased
/// words. Deterministic: merge order is (frequency desc, pair lexicographic
/// asc).
WordPieceVocab build_wordpiece_vocab(const std::vector<TitleRecord>& records,
                                     int target_size);
WordPieceVocab load_wordpiece_vocab(const std::string& path);
void save_wordpiece_vocab(const WordPieceVocab& v, const std::string& path);

/// [CLS] pieces... [SEP] with greedy longest-match-first segmentation;
/// unmatchable or over-long (>64 chars) words become a single [UNK].
TokenSequence wordpiece_encode(std::string_view title,
                               const WordPieceVocab& vocab, int max_len);

/// Inverse of wordpiece_encode for fully segmentable input: specials
/// dropped, "##" pieces joined, words joined by single spaces.
std::string decode(const TokenSequence& seq, const WordPieceVocab& vocab);

class TokenizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ytlc
