#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ytlc/corpus.hpp"
#include "ytlc/tensor.hpp"
#include "ytlc/tokenize.hpp"

namespace ytlc {

enum class EmbedSource { Random, Loaded, PretrainedLocal };

/// Scenario for wiring an embedding matrix into a classifier:
/// (i) random + trainable, (ii) loaded + frozen, (iii) loaded + trainable.
enum class EmbedScenario { Random, Frozen, Finetune };

struct EmbeddingMatrix {
  TensorF matrix;  // [vocab, dim], rows aligned to WordVocab indices
  long dim = 0;
  EmbedSource source = EmbedSource::Random;
  double coverage = 0.0;  // fraction of non-special vocab rows found in file
};

/// Rows ~ N(0, stddev 0.01); PAD row all-zero.
EmbeddingMatrix init_random(const WordVocab& vocab, long dim,
                            std::uint64_t seed);

/// Text vector format: optional "count dim" header, then "token v1 ... v_dim"
/// space-separated lines. Vocab rows absent from the file fall back to the
/// random initialization for `seed`.
EmbeddingMatrix load_vectors(const std::string& path, const WordVocab& vocab,
                             long dim, std::uint64_t seed = 0);

/// Writes all non-special vocab rows in the same text format, with enough
/// digits that covered rows round-trip bit-exactly.
void save_vectors(const EmbeddingMatrix& m, const WordVocab& vocab,
                  const std::string& path);

/// Unigram^0.75 noise distribution over the vocab (specials at zero),
/// normalized to sum 1.
std::vector<double> sgns_noise_distribution(const WordVocab& vocab);

/// Desk-scale skip-gram-with-negative-sampling pretrainer. Window width is
/// sampled uniformly in [1, window] per center token. Single-threaded and
/// deterministic per seed; epochs=0 returns the random initialization.
EmbeddingMatrix sgns_pretrain(const std::vector<TitleRecord>& records,
                              const WordVocab& vocab, long dim, int window,
                              int negatives, int epochs, double lr,
                              std::uint64_t seed);

}  // namespace ytlc
