#include "ytlc/models.hpp"

#include <fstream>
#include <sstream>

#include "ytlc/config.hpp"

namespace ytlc {

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Word2VecCnn: return "word2vec_cnn";
    case Variant::GloveBilstm: return "glove_bilstm";
    case Variant::Bert: return "bert";
  }
  return "?";
}

std::optional<Variant> parse_variant(std::string_view s) {
  if (s == "word2vec_cnn" || s == "cnn") return Variant::Word2VecCnn;
  if (s == "glove_bilstm" || s == "bilstm") return Variant::GloveBilstm;
  if (s == "bert") return Variant::Bert;
  return std::nullopt;
}

const char* scenario_name(EmbedScenario s) {
  switch (s) {
    case EmbedScenario::Random: return "random";
    case EmbedScenario::Frozen: return "frozen";
    case EmbedScenario::Finetune: return "finetune";
  }
  return "?";
}

std::optional<EmbedScenario> parse_scenario(std::string_view s) {
  if (s == "random") return EmbedScenario::Random;
  if (s == "frozen") return EmbedScenario::Frozen;
  if (s == "finetune") return EmbedScenario::Finetune;
  return std::nullopt;
}

void ArchConfig::validate() const {
  if (num_classes != 6)
    throw std::invalid_argument("num_classes must be 6");
  if (vocab_size < 2) throw std::invalid_argument("vocab_size too small");
  if (max_len < 4) throw std::invalid_argument("max_len too small");
  if (variant == Variant::Bert) {
    if (bert_hidden % bert_heads != 0)
      throw std::invalid_argument("bert hidden must be divisible by heads");
  }
}

ArchConfig ArchConfig::preset(Variant v, Scale s) {
  ArchConfig c;
  c.variant = v;
  switch (v) {
    case Variant::Word2VecCnn:
      if (s == Scale::Paper) {
        c.max_len = 100;
        c.embed_dim = 300;
        c.conv_filters = 512;
        c.dense_width = 512;
        c.cnn_dropout = 0.7;
      } else {
        c.max_len = 16;
        c.embed_dim = 16;
        c.conv_filters = 16;
        c.dense_width = 32;
        c.cnn_dropout = 0.3;
      }
      break;
    case Variant::GloveBilstm:
      if (s == Scale::Paper) {
        c.max_len = 100;
        c.embed_dim = 300;
        c.lstm_units = 64;
      } else {
        c.max_len = 16;
        c.embed_dim = 16;
        c.lstm_units = 8;
      }
      break;
    case Variant::Bert:
      if (s == Scale::Paper) {
        c.max_len = 100;
        c.bert_layers = 12;
        c.bert_hidden = 768;
        c.bert_heads = 12;
        c.bert_dense1 = 512;
        c.bert_dense2 = 1024;
      } else {
        c.max_len = 32;
        c.bert_layers = 2;
        c.bert_hidden = 64;
        c.bert_heads = 2;
        c.bert_dense1 = 64;
        c.bert_dense2 = 128;
      }
      c.embed_dim = c.bert_hidden;
      c.bert_dropout = 0.3;
      break;
  }
  return c;
}

std::string ArchConfig::to_toml() const {
  std::ostringstream out;
  out << "[architecture]\n";
  out << "variant = " << toml::quote(variant_name(variant)) << "\n";
  out << "vocab_size = " << vocab_size << "\n";
  out << "max_len = " << max_len << "\n";
  out << "embed_dim = " << embed_dim << "\n";
  out << "scenario = " << toml::quote(scenario_name(scenario)) << "\n";
  out << "num_classes = " << num_classes << "\n";
  switch (variant) {
    case Variant::Word2VecCnn:
      out << "conv_filters = " << conv_filters << "\n";
      out << "conv_width = " << conv_width << "\n";
      out << "pool = " << pool << "\n";
      out << "dense_width = " << dense_width << "\n";
      out << "dropout = " << cnn_dropout << "\n";
      break;
    case Variant::GloveBilstm:
      out << "lstm_units = " << lstm_units << "\n";
      break;
    case Variant::Bert:
      out << "bert_layers = " << bert_layers << "\n";
      out << "bert_hidden = " << bert_hidden << "\n";
      out << "bert_heads = " << bert_heads << "\n";
      out << "bert_ff = " << ff_width() << "\n";
      out << "bert_dense1 = " << bert_dense1 << "\n";
      out << "bert_dense2 = " << bert_dense2 << "\n";
      out << "dropout = " << bert_dropout << "\n";
      break;
  }
  return out.str();
}

ArchConfig ArchConfig::from_toml(const std::string& text) {
  auto t = toml::parse(text);
  ArchConfig c;
  auto vs = toml::get_str(t, "architecture.variant");
  if (!vs) throw toml::ParseError("missing architecture.variant");
  auto v = parse_variant(*vs);
  if (!v) throw toml::ParseError("unknown variant: " + *vs);
  c.variant = *v;
  auto geti = [&](const char* key, long& dst) {
    if (auto x = toml::get_int(t, std::string("architecture.") + key))
      dst = static_cast<long>(*x);
  };
  auto getd = [&](const char* key, double& dst) {
    if (auto x = toml::get_double(t, std::string("architecture.") + key))
      dst = *x;
  };
  geti("vocab_size", c.vocab_size);
  geti("max_len", c.max_len);
  geti("embed_dim", c.embed_dim);
  geti("num_classes", c.num_classes);
  geti("conv_filters", c.conv_filters);
  geti("conv_width", c.conv_width);
  geti("pool", c.pool);
  geti("dense_width", c.dense_width);
  geti("lstm_units", c.lstm_units);
  geti("bert_layers", c.bert_layers);
  geti("bert_hidden", c.bert_hidden);
  geti("bert_heads", c.bert_heads);
  geti("bert_ff", c.bert_ff);
  geti("bert_dense1", c.bert_dense1);
  geti("bert_dense2", c.bert_dense2);
  if (c.variant == Variant::Bert) {
    getd("dropout", c.bert_dropout);
    c.embed_dim = c.bert_hidden;
  } else {
    getd("dropout", c.cnn_dropout);
  }
  if (auto ss = toml::get_str(t, "architecture.scenario")) {
    auto sc = parse_scenario(*ss);
    if (!sc) throw toml::ParseError("unknown scenario: " + *ss);
    c.scenario = *sc;
  }
  c.validate();
  return c;
}

ArchConfig ArchConfig::from_toml_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw toml::ParseError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_toml(ss.str());
}

namespace {

template <typename T>
void flatten_batch(const std::vector<TokenSequence>& batch, long max_len,
                   std::vector<int>& ids, std::vector<std::uint8_t>& mask) {
  ids.clear();
  mask.clear();
  ids.reserve(batch.size() * static_cast<std::size_t>(max_len));
  mask.reserve(batch.size() * static_cast<std::size_t>(max_len));
  for (const auto& seq : batch) {
    nn::check(static_cast<long>(seq.ids.size()) == max_len,
              "batch sequence length does not match model max_len");
    ids.insert(ids.end(), seq.ids.begin(), seq.ids.end());
    mask.insert(mask.end(), seq.attention_mask.begin(),
                seq.attention_mask.end());
  }
}

template <typename T>
Tensor<T> reshape(Tensor<T> x, std::vector<long> shape) {
  Tensor<T> out;
  out.shape = std::move(shape);
  out.data = std::move(x.data);
  return out;
}

template <typename T>
Tensor<T> to_embedding_tensor(const ArchConfig& cfg,
                              const EmbeddingMatrix* embeddings,
                              std::uint64_t seed) {
  if (embeddings) {
    nn::check(embeddings->matrix.dim(0) == cfg.vocab_size &&
                  embeddings->matrix.dim(1) == cfg.embed_dim,
              "embedding matrix does not match config");
    return embeddings->matrix.template cast<T>();
  }
  Tensor<T> e({cfg.vocab_size, cfg.embed_dim});
  Rng rng(Rng::derive(seed, "model-embed"));
  for (long r = 0; r < cfg.vocab_size; ++r) {
    for (long d = 0; d < cfg.embed_dim; ++d) {
      double v = rng.normal() * 0.01;
      if (r != 0) e(r, d) = static_cast<T>(v);  // PAD row stays zero
    }
  }
  return e;
}

// Table-1 stack: Embedding -> Conv1D -> ReLU -> BatchNorm -> MaxPool1D ->
// GlobalMaxPool1D -> Dense+ReLU -> Dropout -> Dense(6) -> Softmax.
template <typename T>
class CnnModel final : public Model<T> {
 public:
  CnnModel(const ArchConfig& cfg, const EmbeddingMatrix* embeddings,
           std::uint64_t seed)
      : Model<T>(cfg, seed) {
    Rng rng(Rng::derive(seed, "init/cnn"));
    emb_ = nn::Embedding<T>(to_embedding_tensor<T>(cfg, embeddings, seed),
                            "embedding", cfg.scenario != EmbedScenario::Frozen);
    conv_ = nn::Conv1d<T>(cfg.conv_width, cfg.embed_dim, cfg.conv_filters,
                          "conv1", rng);
    bn_ = nn::BatchNorm1d<T>(cfg.conv_filters, "bn1");
    pool_ = nn::MaxPool1d<T>(cfg.pool);
    dense1_ = nn::Dense<T>(cfg.conv_filters, cfg.dense_width, "dense1", rng);
    drop_ = nn::Dropout<T>(cfg.cnn_dropout);
    dense2_ = nn::Dense<T>(cfg.dense_width, cfg.num_classes, "head", rng);
  }

  Tensor<T> forward(const std::vector<TokenSequence>& batch,
                    nn::Mode mode) override {
    std::vector<int> ids;
    std::vector<std::uint8_t> mask;
    flatten_batch<T>(batch, this->cfg.max_len, ids, mask);
    long b = static_cast<long>(batch.size());
    auto h = emb_.forward(ids, b, this->cfg.max_len);
    h = conv_.forward(h);
    h = relu1_.forward(h);
    h = bn_.forward(h, mode);
    h = pool_.forward(h);
    h = gpool_.forward(h);
    h = dense1_.forward(h);
    h = relu2_.forward(h);
    h = drop_.forward(h, mode, this->dropout_rng_);
    h = dense2_.forward(h);
    nn::softmax_rows(h);
    return h;
  }

  void backward(const Tensor<T>& dlogits) override {
    auto g = dense2_.backward(dlogits);
    g = drop_.backward(g);
    g = relu2_.backward(g);
    g = dense1_.backward(g);
    g = gpool_.backward(g);
    g = pool_.backward(g);
    g = bn_.backward(g);
    g = relu1_.backward(g);
    g = conv_.backward(g);
    emb_.backward(g);
  }

  nn::ParamRefs<T> params() override {
    nn::ParamRefs<T> p;
    emb_.params(p);
    conv_.params(p);
    bn_.params(p);
    dense1_.params(p);
    dense2_.params(p);
    return p;
  }

 private:
  nn::Embedding<T> emb_;
  nn::Conv1d<T> conv_;
  nn::ReLU<T> relu1_, relu2_;
  nn::BatchNorm1d<T> bn_;
  nn::MaxPool1d<T> pool_;
  nn::GlobalMaxPool1d<T> gpool_;
  nn::Dense<T> dense1_, dense2_;
  nn::Dropout<T> drop_;
};

// Table-3 stack: Embedding -> BiLSTM(seq) -> BiLSTM(final) -> Dense(6) ->
// Softmax.
template <typename T>
class BilstmModel final : public Model<T> {
 public:
  BilstmModel(const ArchConfig& cfg, const EmbeddingMatrix* embeddings,
              std::uint64_t seed)
      : Model<T>(cfg, seed) {
    Rng rng(Rng::derive(seed, "init/bilstm"));
    emb_ = nn::Embedding<T>(to_embedding_tensor<T>(cfg, embeddings, seed),
                            "embedding", cfg.scenario != EmbedScenario::Frozen);
    lstm1_ = nn::BiLstm<T>(cfg.embed_dim, cfg.lstm_units, true, "bilstm1", rng);
    lstm2_ = nn::BiLstm<T>(2 * cfg.lstm_units, cfg.lstm_units, false,
                           "bilstm2", rng);
    head_ = nn::Dense<T>(2 * cfg.lstm_units, cfg.num_classes, "head", rng);
  }

  Tensor<T> forward(const std::vector<TokenSequence>& batch,
                    nn::Mode) override {
    std::vector<int> ids;
    std::vector<std::uint8_t> mask;
    flatten_batch<T>(batch, this->cfg.max_len, ids, mask);
    long b = static_cast<long>(batch.size());
    auto h = emb_.forward(ids, b, this->cfg.max_len);
    h = lstm1_.forward(h);
    h = lstm2_.forward(h);
    h = head_.forward(h);
    nn::softmax_rows(h);
    return h;
  }

  void backward(const Tensor<T>& dlogits) override {
    auto g = head_.backward(dlogits);
    g = lstm2_.backward(g);
    g = lstm1_.backward(g);
    emb_.backward(g);
  }

  nn::ParamRefs<T> params() override {
    nn::ParamRefs<T> p;
    emb_.params(p);
    lstm1_.params(p);
    lstm2_.params(p);
    head_.params(p);
    return p;
  }

 private:
  nn::Embedding<T> emb_;
  nn::BiLstm<T> lstm1_, lstm2_;
  nn::Dense<T> head_;
};

// Transformer encoder classifier: token + learned positional + segment-0
// embeddings -> L x [MHA -> residual+LayerNorm -> FFN(GELU) ->
// residual+LayerNorm] -> CLS vector -> dropout/dense head per Table 5.
template <typename T>
class BertModel final : public Model<T> {
 public:
  BertModel(const ArchConfig& cfg, std::uint64_t seed) : Model<T>(cfg, seed) {
    Rng rng(Rng::derive(seed, "init/bert"));
    long h = cfg.bert_hidden;
    Tensor<T> tok({cfg.vocab_size, h});
    nn::normal_init(tok, 0.01, rng);
    for (long d = 0; d < h; ++d) tok(0, d) = T(0);  // PAD row
    emb_ = nn::Embedding<T>(std::move(tok), "tok_emb", true);
    pos_ = nn::Parameter<T>("pos_emb", Tensor<T>({cfg.max_len, h}));
    nn::normal_init(pos_.value, 0.01, rng);
    seg_ = nn::Parameter<T>("seg_emb", Tensor<T>({h}));
    nn::normal_init(seg_.value, 0.01, rng);
    long ff = cfg.ff_width();
    blocks_.reserve(static_cast<std::size_t>(cfg.bert_layers));
    for (long l = 0; l < cfg.bert_layers; ++l) {
      std::string base = "block" + std::to_string(l);
      Block blk;
      blk.attn = nn::MultiHeadAttention<T>(h, cfg.bert_heads, base + ".attn",
                                           rng);
      blk.ln1 = nn::LayerNorm<T>(h, base + ".ln1");
      blk.ff1 = nn::Dense<T>(h, ff, base + ".ff1", rng);
      blk.ff2 = nn::Dense<T>(ff, h, base + ".ff2", rng);
      blk.ln2 = nn::LayerNorm<T>(h, base + ".ln2");
      blocks_.push_back(std::move(blk));
    }
    drop1_ = nn::Dropout<T>(cfg.bert_dropout);
    drop2_ = nn::Dropout<T>(cfg.bert_dropout);
    drop3_ = nn::Dropout<T>(cfg.bert_dropout);
    dense1_ = nn::Dense<T>(h, cfg.bert_dense1, "dense1", rng);
    dense2_ = nn::Dense<T>(cfg.bert_dense1, cfg.bert_dense2, "dense2", rng);
    head_ = nn::Dense<T>(cfg.bert_dense2, cfg.num_classes, "head", rng);
  }

  Tensor<T> forward(const std::vector<TokenSequence>& batch,
                    nn::Mode mode) override {
    std::vector<int> ids;
    flatten_batch<T>(batch, this->cfg.max_len, ids, mask_cache_);
    long b = static_cast<long>(batch.size());
    long L = this->cfg.max_len, h = this->cfg.bert_hidden;
    auto x = emb_.forward(ids, b, L);
    for (long bi = 0; bi < b; ++bi)
      for (long t = 0; t < L; ++t) {
        T* xr = x.row(bi, t);
        const T* pr = pos_.value.row(t);
        for (long d = 0; d < h; ++d) xr[d] += pr[d] + seg_.value(d);
      }
    batch_cache_ = b;
    for (auto& blk : blocks_) {
      auto a = blk.attn.forward(x, mask_cache_);
      // residual
      kern::axpy(T(1), x.ptr(), a.ptr(), static_cast<std::size_t>(a.numel()));
      x = blk.ln1.forward(a);
      auto f = blk.ff1.forward(reshape(Tensor<T>(x), {b * L, h}));
      f = blk.gelu.forward(f);
      f = blk.ff2.forward(f);
      auto f3 = reshape(std::move(f), {b, L, h});
      kern::axpy(T(1), x.ptr(), f3.ptr(),
                 static_cast<std::size_t>(f3.numel()));
      x = blk.ln2.forward(f3);
    }
    // CLS-position pooling.
    Tensor<T> cls({b, h});
    for (long bi = 0; bi < b; ++bi) {
      const T* xr = x.row(bi, 0);
      T* cr = cls.row(bi);
      for (long d = 0; d < h; ++d) cr[d] = xr[d];
    }
    auto y = drop1_.forward(cls, mode, this->dropout_rng_);
    y = dense1_.forward(y);
    y = relu1_.forward(y);
    y = drop2_.forward(y, mode, this->dropout_rng_);
    y = dense2_.forward(y);
    y = relu2_.forward(y);
    y = drop3_.forward(y, mode, this->dropout_rng_);
    y = head_.forward(y);
    nn::softmax_rows(y);
    return y;
  }

  void backward(const Tensor<T>& dlogits) override {
    long b = batch_cache_, L = this->cfg.max_len, h = this->cfg.bert_hidden;
    auto g = head_.backward(dlogits);
    g = drop3_.backward(g);
    g = relu2_.backward(g);
    g = dense2_.backward(g);
    g = drop2_.backward(g);
    g = relu1_.backward(g);
    g = dense1_.backward(g);
    g = drop1_.backward(g);
    Tensor<T> dx({b, L, h});
    for (long bi = 0; bi < b; ++bi) {
      const T* gr = g.row(bi);
      T* dr = dx.row(bi, 0);
      for (long d = 0; d < h; ++d) dr[d] = gr[d];
    }
    for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) {
      auto& blk = *it;
      auto d_ff_out = blk.ln2.backward(dx);
      // residual: gradient flows both into the FFN and around it
      auto df = blk.ff2.backward(reshape(Tensor<T>(d_ff_out), {b * L, h}));
      df = blk.gelu.backward(df);
      df = blk.ff1.backward(df);
      auto d_attn_out = reshape(std::move(df), {b, L, h});
      kern::axpy(T(1), d_ff_out.ptr(), d_attn_out.ptr(),
                 static_cast<std::size_t>(d_attn_out.numel()));
      auto d_ln1_in = blk.ln1.backward(d_attn_out);
      auto d_x = blk.attn.backward(d_ln1_in);
      kern::axpy(T(1), d_ln1_in.ptr(), d_x.ptr(),
                 static_cast<std::size_t>(d_x.numel()));
      dx = std::move(d_x);
    }
    for (long bi = 0; bi < b; ++bi)
      for (long t = 0; t < L; ++t) {
        const T* dr = dx.row(bi, t);
        kern::axpy(T(1), dr, pos_.grad.row(t), static_cast<std::size_t>(h));
        kern::axpy(T(1), dr, seg_.grad.ptr(), static_cast<std::size_t>(h));
      }
    emb_.backward(dx);
  }

  nn::ParamRefs<T> params() override {
    nn::ParamRefs<T> p;
    emb_.params(p);
    p.push_back(&pos_);
    p.push_back(&seg_);
    for (auto& blk : blocks_) {
      blk.attn.params(p);
      blk.ln1.params(p);
      blk.ff1.params(p);
      blk.ff2.params(p);
      blk.ln2.params(p);
    }
    dense1_.params(p);
    dense2_.params(p);
    head_.params(p);
    return p;
  }

 private:
  struct Block {
    nn::MultiHeadAttention<T> attn;
    nn::LayerNorm<T> ln1;
    nn::Dense<T> ff1, ff2;
    nn::Gelu<T> gelu;
    nn::LayerNorm<T> ln2;
  };

  nn::Embedding<T> emb_;
  nn::Parameter<T> pos_, seg_;
  std::vector<Block> blocks_;
  nn::Dropout<T> drop1_, drop2_, drop3_;
  nn::Dense<T> dense1_, dense2_, head_;
  nn::ReLU<T> relu1_, relu2_;
  std::vector<std::uint8_t> mask_cache_;
  long batch_cache_ = 0;
};

}  // namespace

template <typename T>
std::unique_ptr<Model<T>> build_model(const ArchConfig& cfg,
                                      const EmbeddingMatrix* embeddings,
                                      std::uint64_t seed) {
  cfg.validate();
  switch (cfg.variant) {
    case Variant::Word2VecCnn:
      return std::make_unique<CnnModel<T>>(cfg, embeddings, seed);
    case Variant::GloveBilstm:
      return std::make_unique<BilstmModel<T>>(cfg, embeddings, seed);
    case Variant::Bert:
      return std::make_unique<BertModel<T>>(cfg, seed);
  }
  throw std::invalid_argument("unknown variant");
}

template std::unique_ptr<Model<float>> build_model<float>(
    const ArchConfig&, const EmbeddingMatrix*, std::uint64_t);
template std::unique_ptr<Model<double>> build_model<double>(
    const ArchConfig&, const EmbeddingMatrix*, std::uint64_t);

TensorF TextClassifier::forward_titles(const std::vector<std::string>& titles,
                                       nn::Mode mode) {
  std::vector<TokenSequence> batch;
  batch.reserve(titles.size());
  for (const auto& t : titles) batch.push_back(encode(t));
  return model->forward(batch, mode);
}

std::pair<LeaningLabel, std::array<float, 6>> TextClassifier::predict(
    const std::string& title) {
  auto probs = forward_titles({title}, nn::Mode::Eval);
  std::array<float, 6> dist{};
  for (int c = 0; c < 6; ++c) dist[static_cast<std::size_t>(c)] = probs(0, c);
  return {static_cast<LeaningLabel>(argmax_label(dist.data())), dist};
}

int argmax_label(const float* probs, int n) {
  int best = 0;
  for (int c = 1; c < n; ++c)
    if (probs[c] > probs[best]) best = c;
  return best;
}

TextClassifier make_classifier(const ArchConfig& cfg, WordVocab word_vocab,
                               const EmbeddingMatrix* embeddings,
                               std::uint64_t seed) {
  nn::check(cfg.variant != Variant::Bert,
            "word-level vocab requires cnn or bilstm variant");
  TextClassifier c;
  c.cfg = cfg;
  c.cfg.vocab_size = word_vocab.size();
  c.word_vocab = std::move(word_vocab);
  c.model = build_model<float>(c.cfg, embeddings, seed);
  return c;
}

TextClassifier make_classifier(const ArchConfig& cfg, WordPieceVocab wp_vocab,
                               std::uint64_t seed) {
  nn::check(cfg.variant == Variant::Bert,
            "wordpiece vocab requires the bert variant");
  TextClassifier c;
  c.cfg = cfg;
  c.cfg.vocab_size = wp_vocab.size();
  c.uses_wordpiece = true;
  c.wp_vocab = std::move(wp_vocab);
  c.model = build_model<float>(c.cfg, nullptr, seed);
  return c;
}

}  // namespace ytlc
