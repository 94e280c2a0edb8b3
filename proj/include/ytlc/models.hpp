#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ytlc/embed.hpp"
#include "ytlc/nn.hpp"
#include "ytlc/tokenize.hpp"

namespace ytlc {

enum class Variant { Word2VecCnn, GloveBilstm, Bert };
enum class Scale { Paper, Desk };

const char* variant_name(Variant v);
std::optional<Variant> parse_variant(std::string_view s);
const char* scenario_name(EmbedScenario s);
std::optional<EmbedScenario> parse_scenario(std::string_view s);

struct ArchConfig {
  Variant variant = Variant::Word2VecCnn;
  long vocab_size = 0;
  long max_len = 100;
  long embed_dim = 300;  // word embedding dim; for bert equals bert_hidden
  // word2vec_cnn
  long conv_filters = 512;
  long conv_width = 3;
  long pool = 3;
  long dense_width = 512;
  double cnn_dropout = 0.7;
  // glove_bilstm
  long lstm_units = 64;
  // bert
  long bert_layers = 12;
  long bert_hidden = 768;
  long bert_heads = 12;
  long bert_ff = 0;  // 0 means 4 * bert_hidden
  long bert_dense1 = 512;
  long bert_dense2 = 1024;
  double bert_dropout = 0.3;

  EmbedScenario scenario = EmbedScenario::Random;
  long num_classes = 6;

  long ff_width() const { return bert_ff > 0 ? bert_ff : 4 * bert_hidden; }
  void validate() const;

  /// Named presets; "paper" mirrors the published tables, "desk" is small
  /// enough for tests and laptops.
  static ArchConfig preset(Variant v, Scale s);

  std::string to_toml() const;
  static ArchConfig from_toml(const std::string& text);
  static ArchConfig from_toml_file(const std::string& path);
};

template <typename T>
class Model {
 public:
  explicit Model(ArchConfig cfg, std::uint64_t seed)
      : cfg(std::move(cfg)), dropout_rng_(Rng::derive(seed, "dropout")) {}
  virtual ~Model() = default;

  /// Probabilities [batch, 6]; rows sum to 1.
  virtual Tensor<T> forward(const std::vector<TokenSequence>& batch,
                            nn::Mode mode) = 0;
  /// Upstream gradient w.r.t. pre-softmax logits.
  virtual void backward(const Tensor<T>& dlogits) = 0;
  virtual nn::ParamRefs<T> params() = 0;

  void reseed_dropout(std::uint64_t seed) { dropout_rng_ = Rng(seed); }

  ArchConfig cfg;

 protected:
  Rng dropout_rng_;
};

template <typename T>
std::unique_ptr<Model<T>> build_model(const ArchConfig& cfg,
                                      const EmbeddingMatrix* embeddings,
                                      std::uint64_t seed);

extern template std::unique_ptr<Model<float>> build_model<float>(
    const ArchConfig&, const EmbeddingMatrix*, std::uint64_t);
extern template std::unique_ptr<Model<double>> build_model<double>(
    const ArchConfig&, const EmbeddingMatrix*, std::uint64_t);

/// A model plus its bound tokenizer: the unit the train/eval/channel
/// pipelines and the checkpoint format operate on.
struct TextClassifier {
  ArchConfig cfg;
  std::unique_ptr<Model<float>> model;
  bool uses_wordpiece = false;
  WordVocab word_vocab;
  WordPieceVocab wp_vocab;

  std::uint64_t tokenizer_fingerprint() const {
    return uses_wordpiece ? wp_vocab.fingerprint() : word_vocab.fingerprint();
  }

  TokenSequence encode(const std::string& title) const {
    return uses_wordpiece
               ? wordpiece_encode(title, wp_vocab, static_cast<int>(cfg.max_len))
               : encode_words(title, word_vocab, static_cast<int>(cfg.max_len));
  }

  TensorF forward_titles(const std::vector<std::string>& titles,
                         nn::Mode mode);
  std::pair<LeaningLabel, std::array<float, 6>> predict(
      const std::string& title);
};

TextClassifier make_classifier(const ArchConfig& cfg, WordVocab word_vocab,
                               const EmbeddingMatrix* embeddings,
                               std::uint64_t seed);
TextClassifier make_classifier(const ArchConfig& cfg, WordPieceVocab wp_vocab,
                               std::uint64_t seed);

/// Argmax with ties broken toward the lower class index.
int argmax_label(const float* probs, int n = 6);

}  // namespace ytlc
