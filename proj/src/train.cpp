#include "ytlc/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ytlc/config.hpp"

namespace ytlc {

using json = nlohmann::ordered_json;

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw TrainError("learning_rate must be > 0");
  if (batch_size < 1) throw TrainError("batch_size must be >= 1");
  if (epochs < 0) throw TrainError("epochs must be >= 0");
}

TrainConfig TrainConfig::preset(Variant v, Scale s) {
  TrainConfig c;
  switch (v) {
    case Variant::Word2VecCnn:
      c.learning_rate = s == Scale::Paper ? 1e-4 : 3e-3;
      c.batch_size = s == Scale::Paper ? 256 : 32;
      c.epochs = 25;
      break;
    case Variant::GloveBilstm:
      c.learning_rate = s == Scale::Paper ? 1e-3 : 1e-2;
      c.batch_size = s == Scale::Paper ? 256 : 32;
      c.epochs = 8;
      break;
    case Variant::Bert:
      c.learning_rate = s == Scale::Paper ? 1e-4 : 1e-3;
      c.batch_size = s == Scale::Paper ? 128 : 32;
      c.epochs = 10;
      break;
  }
  return c;
}

std::string TrainConfig::to_toml() const {
  std::ostringstream out;
  out << "[train]\n";
  out << "learning_rate = " << learning_rate << "\n";
  out << "batch_size = " << batch_size << "\n";
  out << "epochs = " << epochs << "\n";
  out << "class_weighting = " << (class_weighting ? "true" : "false") << "\n";
  out << "seed = " << seed << "\n";
  out << "eval_every = " << eval_every << "\n";
  return out.str();
}

TrainConfig TrainConfig::from_toml(const std::string& text) {
  auto t = toml::parse(text);
  TrainConfig c;
  if (auto x = toml::get_double(t, "train.learning_rate")) c.learning_rate = *x;
  if (auto x = toml::get_int(t, "train.batch_size"))
    c.batch_size = static_cast<long>(*x);
  if (auto x = toml::get_int(t, "train.epochs"))
    c.epochs = static_cast<long>(*x);
  if (auto x = toml::get_bool(t, "train.class_weighting"))
    c.class_weighting = *x;
  if (auto x = toml::get_int(t, "train.seed"))
    c.seed = static_cast<std::uint64_t>(*x);
  if (auto x = toml::get_int(t, "train.eval_every"))
    c.eval_every = static_cast<long>(*x);
  c.validate();
  return c;
}

std::array<double, 6> compute_class_weights(const std::array<long, 6>& counts) {
  long n = 0;
  for (long c : counts) {
    if (c < 0) throw TrainError("negative class count");
    n += c;
  }
  if (n == 0) throw TrainError("class weights need at least one sample");
  std::array<double, 6> w{};
  for (int c = 0; c < 6; ++c) {
    long nc = counts[static_cast<std::size_t>(c)];
    w[static_cast<std::size_t>(c)] =
        nc > 0 ? static_cast<double>(n) / (6.0 * static_cast<double>(nc)) : 0.0;
  }
  return w;
}

void AdamState::init(const nn::ParamRefs<float>& params) {
  slots.clear();
  t = 0;
  for (auto* p : params) {
    if (!p->trainable) continue;
    Slot s;
    s.m = TensorF(p->value.shape);
    s.v = TensorF(p->value.shape);
    slots.push_back(std::move(s));
  }
}

void adam_step(const nn::ParamRefs<float>& params, AdamState& state,
               const TrainConfig& cfg) {
  // Validate all gradients before touching any parameter so an abort leaves
  // the model untouched.
  for (auto* p : params) {
    if (!p->trainable) continue;
    for (long i = 0; i < p->grad.numel(); ++i)
      if (!std::isfinite(p->grad(i)))
        throw TrainError("adam: non-finite gradient in " + p->name);
  }
  state.t += 1;
  double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  std::size_t si = 0;
  for (auto* p : params) {
    if (!p->trainable) continue;
    auto& slot = state.slots[si++];
    for (long i = 0; i < p->value.numel(); ++i) {
      double g = static_cast<double>(p->grad(i));
      double m = cfg.beta1 * slot.m(i) + (1.0 - cfg.beta1) * g;
      double v = cfg.beta2 * slot.v(i) + (1.0 - cfg.beta2) * g * g;
      slot.m(i) = static_cast<float>(m);
      slot.v(i) = static_cast<float>(v);
      double update =
          cfg.learning_rate * (m / bc1) / (std::sqrt(v / bc2) + cfg.eps);
      p->value(i) = static_cast<float>(p->value(i) - update);
    }
  }
}

namespace {

struct EncodedSet {
  std::vector<TokenSequence> seqs;
  std::vector<int> targets;
};

EncodedSet encode_set(const TextClassifier& clf,
                      const std::vector<TitleRecord>& records) {
  EncodedSet out;
  out.seqs.reserve(records.size());
  out.targets.reserve(records.size());
  for (const auto& r : records) {
    if (!r.label) throw TrainError("unlabeled record in training data");
    out.seqs.push_back(clf.encode(r.title));
    out.targets.push_back(static_cast<int>(*r.label));
  }
  return out;
}

struct ValResult {
  double accuracy = 0;
  double weighted_f1 = 0;
};

ValResult validate_pass(TextClassifier& clf, const EncodedSet& val,
                        long batch_size) {
  long n = static_cast<long>(val.seqs.size());
  std::array<std::array<long, 6>, 6> cm{};
  for (long start = 0; start < n; start += batch_size) {
    long end = std::min(n, start + batch_size);
    std::vector<TokenSequence> batch(val.seqs.begin() + start,
                                     val.seqs.begin() + end);
    auto probs = clf.model->forward(batch, nn::Mode::Eval);
    for (long i = 0; i < end - start; ++i) {
      int pred = argmax_label(probs.row(i));
      int truth = val.targets[static_cast<std::size_t>(start + i)];
      cm[static_cast<std::size_t>(truth)][static_cast<std::size_t>(pred)]++;
    }
  }
  ValResult res;
  long trace = 0;
  for (int c = 0; c < 6; ++c) trace += cm[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
  res.accuracy = n > 0 ? static_cast<double>(trace) / static_cast<double>(n) : 0;
  double f1_sum = 0;
  for (int c = 0; c < 6; ++c) {
    long row = 0, col = 0;
    for (int k = 0; k < 6; ++k) {
      row += cm[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)];
      col += cm[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)];
    }
    long tp = cm[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
    double p = col > 0 ? static_cast<double>(tp) / static_cast<double>(col) : 0;
    double r = row > 0 ? static_cast<double>(tp) / static_cast<double>(row) : 0;
    double f1 = p + r > 0 ? 2 * p * r / (p + r) : 0;
    f1_sum += f1 * static_cast<double>(row);
  }
  res.weighted_f1 = n > 0 ? f1_sum / static_cast<double>(n) : 0;
  return res;
}

std::vector<TensorF> snapshot_params(const nn::ParamRefs<float>& params) {
  std::vector<TensorF> out;
  out.reserve(params.size());
  for (auto* p : params) out.push_back(p->value);
  return out;
}

void restore_params(const nn::ParamRefs<float>& params,
                    const std::vector<TensorF>& snap) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = snap[i];
}

}  // namespace

TrainHistory fit(TextClassifier& clf, const DatasetSplit& splits,
                 const TrainConfig& cfg) {
  cfg.validate();
  if (splits.train.empty()) throw TrainError("empty train split");

  TrainHistory history;
  if (cfg.epochs == 0) return history;

  auto weights = cfg.class_weighting ? compute_class_weights(class_counts(splits.train))
                                     : std::array<double, 6>{1, 1, 1, 1, 1, 1};

  auto train = encode_set(clf, splits.train);
  auto val = encode_set(clf, splits.validation);
  long n = static_cast<long>(train.seqs.size());

  auto params = clf.model->params();
  AdamState adam;
  adam.init(params);
  clf.model->reseed_dropout(Rng::derive(cfg.seed, "fit/dropout"));
  Rng shuffle_rng(Rng::derive(cfg.seed, "fit/shuffle"));

  std::vector<long> order(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

  std::vector<TensorF> best_snapshot;

  for (long epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates on the index list; the stream continues across epochs.
    for (long i = n - 1; i > 0; --i) {
      long j = static_cast<long>(
          shuffle_rng.below(static_cast<std::uint64_t>(i + 1)));
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(j)]);
    }

    double loss_sum = 0;
    long correct = 0;
    for (long start = 0; start < n; start += cfg.batch_size) {
      long end = std::min(n, start + cfg.batch_size);
      std::vector<TokenSequence> batch;
      std::vector<int> targets;
      batch.reserve(static_cast<std::size_t>(end - start));
      targets.reserve(static_cast<std::size_t>(end - start));
      for (long i = start; i < end; ++i) {
        long idx = order[static_cast<std::size_t>(i)];
        batch.push_back(train.seqs[static_cast<std::size_t>(idx)]);
        targets.push_back(train.targets[static_cast<std::size_t>(idx)]);
      }
      auto probs = clf.model->forward(batch, nn::Mode::Train);
      auto loss = nn::weighted_cross_entropy(probs, targets, weights);
      if (!std::isfinite(loss.loss))
        throw TrainError("non-finite loss at epoch " + std::to_string(epoch));
      nn::zero_grads(params);
      clf.model->backward(loss.dlogits);
      adam_step(params, adam, cfg);
      loss_sum += static_cast<double>(loss.loss) *
                  static_cast<double>(end - start);
      for (long i = 0; i < end - start; ++i)
        if (argmax_label(probs.row(i)) ==
            targets[static_cast<std::size_t>(i)])
          ++correct;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(n);
    stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
    if (!val.seqs.empty()) {
      auto vr = validate_pass(clf, val, cfg.batch_size);
      stats.val_accuracy = vr.accuracy;
      stats.val_weighted_f1 = vr.weighted_f1;
      if (history.best_epoch < 0 || vr.accuracy > history.best_val_accuracy) {
        history.best_epoch = epoch;
        history.best_val_accuracy = vr.accuracy;
        best_snapshot = snapshot_params(params);
      }
    }
    history.epochs.push_back(stats);
  }

  if (!best_snapshot.empty()) restore_params(params, best_snapshot);
  return history;
}

// ---------------------------------------------------------------------------
// Checkpoint container.

namespace {

constexpr char kMagic[4] = {'L', 'N', 'S', 'C'};
constexpr std::uint32_t kVersion = 1;

json config_to_json(const ArchConfig& c) {
  json j;
  j["variant"] = variant_name(c.variant);
  j["vocab_size"] = c.vocab_size;
  j["max_len"] = c.max_len;
  j["embed_dim"] = c.embed_dim;
  j["conv_filters"] = c.conv_filters;
  j["conv_width"] = c.conv_width;
  j["pool"] = c.pool;
  j["dense_width"] = c.dense_width;
  j["cnn_dropout"] = c.cnn_dropout;
  j["lstm_units"] = c.lstm_units;
  j["bert_layers"] = c.bert_layers;
  j["bert_hidden"] = c.bert_hidden;
  j["bert_heads"] = c.bert_heads;
  j["bert_ff"] = c.bert_ff;
  j["bert_dense1"] = c.bert_dense1;
  j["bert_dense2"] = c.bert_dense2;
  j["bert_dropout"] = c.bert_dropout;
  j["scenario"] = scenario_name(c.scenario);
  j["num_classes"] = c.num_classes;
  return j;
}

ArchConfig config_from_json(const json& j) {
  ArchConfig c;
  auto v = parse_variant(j.at("variant").get<std::string>());
  if (!v) throw CheckpointError("checkpoint: unknown variant");
  c.variant = *v;
  c.vocab_size = j.at("vocab_size").get<long>();
  c.max_len = j.at("max_len").get<long>();
  c.embed_dim = j.at("embed_dim").get<long>();
  c.conv_filters = j.at("conv_filters").get<long>();
  c.conv_width = j.at("conv_width").get<long>();
  c.pool = j.at("pool").get<long>();
  c.dense_width = j.at("dense_width").get<long>();
  c.cnn_dropout = j.at("cnn_dropout").get<double>();
  c.lstm_units = j.at("lstm_units").get<long>();
  c.bert_layers = j.at("bert_layers").get<long>();
  c.bert_hidden = j.at("bert_hidden").get<long>();
  c.bert_heads = j.at("bert_heads").get<long>();
  c.bert_ff = j.at("bert_ff").get<long>();
  c.bert_dense1 = j.at("bert_dense1").get<long>();
  c.bert_dense2 = j.at("bert_dense2").get<long>();
  c.bert_dropout = j.at("bert_dropout").get<double>();
  auto sc = parse_scenario(j.at("scenario").get<std::string>());
  if (!sc) throw CheckpointError("checkpoint: unknown scenario");
  c.scenario = *sc;
  c.num_classes = j.at("num_classes").get<long>();
  return c;
}

template <typename T>
void write_le(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

}  // namespace

void save_checkpoint(TextClassifier& clf, const std::string& path,
                     const CheckpointMeta& meta) {
  auto params = clf.model->params();

  json header;
  header["format"] = kVersion;
  header["config"] = config_to_json(clf.cfg);

  json tok;
  tok["type"] = clf.uses_wordpiece ? "wordpiece" : "word";
  tok["fingerprint"] = clf.tokenizer_fingerprint();
  if (clf.uses_wordpiece) {
    tok["tokens"] = clf.wp_vocab.tokens;
    tok["pad_id"] = clf.wp_vocab.pad_id;
    tok["unk_id"] = clf.wp_vocab.unk_id;
    tok["cls_id"] = clf.wp_vocab.cls_id;
    tok["sep_id"] = clf.wp_vocab.sep_id;
  } else {
    tok["tokens"] = clf.word_vocab.tokens;
    tok["frequency"] = clf.word_vocab.frequency;
    tok["max_size"] = clf.word_vocab.max_size;
  }
  header["tokenizer"] = std::move(tok);

  json tensors = json::array();
  std::uint64_t offset = 0;
  for (auto* p : params) {
    json t;
    t["name"] = p->name;
    t["shape"] = p->value.shape;
    t["offset"] = offset;
    tensors.push_back(std::move(t));
    offset += static_cast<std::uint64_t>(p->value.numel()) * sizeof(float);
  }
  header["tensors"] = std::move(tensors);

  json md;
  md["epoch"] = meta.epoch;
  md["val_accuracy"] = meta.val_accuracy;
  md["seed"] = meta.seed;
  header["metadata"] = std::move(md);

  std::string header_bytes = header.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write checkpoint: " + path);
  out.write(kMagic, 4);
  write_le(out, kVersion);
  write_le(out, static_cast<std::uint64_t>(header_bytes.size()));
  out.write(header_bytes.data(),
            static_cast<std::streamsize>(header_bytes.size()));
  for (auto* p : params)
    out.write(reinterpret_cast<const char*>(p->value.ptr()),
              static_cast<std::streamsize>(p->value.numel() * sizeof(float)));
  if (!out) throw CheckpointError("write failure on checkpoint: " + path);
}

TextClassifier load_checkpoint(const std::string& path,
                               CheckpointMeta* meta_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);

  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw CheckpointError("checkpoint: bad magic (not an LNSC file)");
  std::uint32_t version = 0;
  std::uint64_t header_len = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
  if (!in) throw CheckpointError("checkpoint: truncated header prefix");
  if (version != kVersion)
    throw CheckpointError("checkpoint: unsupported version " +
                          std::to_string(version));
  if (header_len > (1ULL << 32))
    throw CheckpointError("checkpoint: implausible header length");

  std::string header_bytes(header_len, '\0');
  in.read(header_bytes.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw CheckpointError("checkpoint: truncated header");

  json header;
  try {
    header = json::parse(header_bytes);
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("checkpoint: bad header JSON: ") +
                          e.what());
  }

  try {
    ArchConfig cfg = config_from_json(header.at("config"));
    const auto& tok = header.at("tokenizer");
    std::string tok_type = tok.at("type").get<std::string>();

    TextClassifier clf;
    std::uint64_t seed = header.at("metadata").at("seed").get<std::uint64_t>();
    if (tok_type == "wordpiece") {
      WordPieceVocab v;
      v.tokens = tok.at("tokens").get<std::vector<std::string>>();
      for (int i = 0; i < static_cast<int>(v.tokens.size()); ++i)
        v.index[v.tokens[static_cast<std::size_t>(i)]] = i;
      v.pad_id = tok.at("pad_id").get<int>();
      v.unk_id = tok.at("unk_id").get<int>();
      v.cls_id = tok.at("cls_id").get<int>();
      v.sep_id = tok.at("sep_id").get<int>();
      clf = make_classifier(cfg, std::move(v), seed);
    } else if (tok_type == "word") {
      WordVocab v;
      v.tokens = tok.at("tokens").get<std::vector<std::string>>();
      v.frequency = tok.at("frequency").get<std::vector<long>>();
      v.max_size = tok.at("max_size").get<int>();
      for (int i = 0; i < static_cast<int>(v.tokens.size()); ++i)
        v.index[v.tokens[static_cast<std::size_t>(i)]] = i;
      clf = make_classifier(cfg, std::move(v), nullptr, seed);
    } else {
      throw CheckpointError("checkpoint: unknown tokenizer type " + tok_type);
    }

    std::uint64_t fp = tok.at("fingerprint").get<std::uint64_t>();
    if (fp != clf.tokenizer_fingerprint())
      throw CheckpointError("checkpoint: tokenizer fingerprint mismatch");

    auto params = clf.model->params();
    std::unordered_map<std::string, nn::Parameter<float>*> by_name;
    for (auto* p : params) by_name[p->name] = p;

    for (const auto& t : header.at("tensors")) {
      std::string name = t.at("name").get<std::string>();
      auto shape = t.at("shape").get<std::vector<long>>();
      auto it = by_name.find(name);
      if (it == by_name.end())
        throw CheckpointError("checkpoint: unexpected tensor " + name);
      if (it->second->value.shape != shape)
        throw CheckpointError("checkpoint: shape mismatch for " + name +
                              ": stored " + shape_str(shape) + ", model " +
                              shape_str(it->second->value.shape));
      in.read(reinterpret_cast<char*>(it->second->value.ptr()),
              static_cast<std::streamsize>(it->second->value.numel() *
                                           sizeof(float)));
      if (!in)
        throw CheckpointError("checkpoint: truncated payload at " + name);
      by_name.erase(it);
    }
    if (!by_name.empty())
      throw CheckpointError("checkpoint: missing tensor " +
                            by_name.begin()->first);

    if (meta_out) {
      meta_out->epoch = header.at("metadata").at("epoch").get<long>();
      meta_out->val_accuracy =
          header.at("metadata").at("val_accuracy").get<double>();
      meta_out->seed = seed;
    }
    return clf;
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError(std::string("checkpoint: malformed header: ") +
                          e.what());
  }
}

}  // namespace ytlc
