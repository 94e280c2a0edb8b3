#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "ytlc/train.hpp"

using namespace ytlc;

namespace {

// Tiny labeled corpus where each class has its own distinctive keyword, so
// even a desk-scale model can make progress in a few epochs.
std::vector<TitleRecord> keyword_corpus(int per_class) {
  static const char* kw[6] = {"comrade", "union",   "budget",
                              "culture", "liberty", "patriot"};
  std::vector<TitleRecord> out;
  for (int c = 0; c < 6; ++c)
    for (int i = 0; i < per_class; ++i) {
      TitleRecord r;
      r.video_id = "v" + std::to_string(c * per_class + i);
      r.channel_id = "ch" + std::to_string(c);
      r.title = std::string(kw[c]) + " report " + std::to_string(i % 7);
      r.label = static_cast<LeaningLabel>(c);
      out.push_back(std::move(r));
    }
  return out;
}

DatasetSplit make_splits(std::vector<TitleRecord> records) {
  return stratified_split(records, {0.64, 0.16, 0.20}, 3);
}

TextClassifier desk_classifier(const std::vector<TitleRecord>& records,
                               std::uint64_t seed) {
  auto vocab = build_word_vocab(records, 200);
  ArchConfig cfg = ArchConfig::preset(Variant::GloveBilstm, Scale::Desk);
  cfg.max_len = 8;
  cfg.embed_dim = 8;
  cfg.lstm_units = 4;
  return make_classifier(cfg, vocab, nullptr, seed);
}

std::vector<char> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::vector<char>(std::istreambuf_iterator<char>(in),
                           std::istreambuf_iterator<char>());
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/ytlc_train_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("class weights follow N / (6 n_c) with zeros for empty classes") {
  auto w = compute_class_weights({10, 20, 30, 10, 20, 10});
  CHECK(w[0] == doctest::Approx(100.0 / 60.0));   // 1.667
  CHECK(w[1] == doctest::Approx(100.0 / 120.0));  // 0.833
  CHECK(w[2] == doctest::Approx(100.0 / 180.0));  // 0.556
  CHECK(w[3] == doctest::Approx(100.0 / 60.0));
  CHECK(w[4] == doctest::Approx(100.0 / 120.0));
  CHECK(w[5] == doctest::Approx(100.0 / 60.0));

  auto partial = compute_class_weights({5, 0, 5, 0, 0, 0});
  CHECK(partial[1] == 0.0);
  CHECK(partial[0] == doctest::Approx(10.0 / 30.0));
  CHECK_THROWS_AS(compute_class_weights({0, 0, 0, 0, 0, 0}), TrainError);
}

TEST_CASE("balanced data: weighting on/off gives identical weights") {
  auto w = compute_class_weights({40, 40, 40, 40, 40, 40});
  for (double x : w) CHECK(x == doctest::Approx(1.0));
}

TEST_CASE("train config presets and validation") {
  auto cnn = TrainConfig::preset(Variant::Word2VecCnn, Scale::Paper);
  CHECK(cnn.learning_rate == 1e-4);
  CHECK(cnn.batch_size == 256);
  CHECK(cnn.epochs == 25);
  auto lstm = TrainConfig::preset(Variant::GloveBilstm, Scale::Paper);
  CHECK(lstm.learning_rate == 1e-3);
  CHECK(lstm.batch_size == 256);
  CHECK(lstm.epochs == 8);
  auto bert = TrainConfig::preset(Variant::Bert, Scale::Paper);
  CHECK(bert.learning_rate == 1e-4);
  CHECK(bert.batch_size == 128);
  CHECK(bert.epochs == 10);

  for (Variant v :
       {Variant::Word2VecCnn, Variant::GloveBilstm, Variant::Bert}) {
    auto desk = TrainConfig::preset(v, Scale::Desk);
    CHECK(desk.epochs ==
          TrainConfig::preset(v, Scale::Paper).epochs);  // same budget
    CHECK_NOTHROW(desk.validate());
  }
  TrainConfig bad;
  bad.learning_rate = 0;
  CHECK_THROWS(bad.validate());
  bad = TrainConfig{};
  bad.batch_size = 0;
  CHECK_THROWS(bad.validate());

  auto round = TrainConfig::from_toml(lstm.to_toml());
  CHECK(round.learning_rate == lstm.learning_rate);
  CHECK(round.batch_size == lstm.batch_size);
  CHECK(round.epochs == lstm.epochs);
  CHECK(round.class_weighting == lstm.class_weighting);
}

TEST_CASE("adam single-scalar first step moves by ~ -lr") {
  // With m_hat/sqrt(v_hat) = sign(g) at t=1, the bias-corrected update is
  // lr * g / (|g| + eps') ~= lr regardless of gradient magnitude.
  nn::Parameter<float> theta("t", TensorF({1}, {1.0f}));
  theta.grad(0) = 4.2f;
  nn::ParamRefs<float> params = {&theta};
  AdamState state;
  state.init(params);
  TrainConfig cfg;
  cfg.learning_rate = 0.1;
  adam_step(params, state, cfg);
  CHECK(theta.value(0) == doctest::Approx(1.0 - 0.0999999).epsilon(1e-6));
  CHECK(state.t == 1);
}

TEST_CASE("adam skips non-trainable parameters entirely") {
  nn::Parameter<float> frozen("f", TensorF({2}, {1.0f, 2.0f}), false);
  nn::Parameter<float> live("l", TensorF({1}, {0.0f}));
  frozen.grad(0) = 5;
  live.grad(0) = 1;
  nn::ParamRefs<float> params = {&frozen, &live};
  AdamState state;
  state.init(params);
  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  adam_step(params, state, cfg);
  CHECK(frozen.value(0) == 1.0f);
  CHECK(frozen.value(1) == 2.0f);
  CHECK(live.value(0) != 0.0f);
}

TEST_CASE("adam rejects non-finite gradients and names the tensor") {
  nn::Parameter<float> p("dense1.W", TensorF({1}, {0.0f}));
  p.grad(0) = std::numeric_limits<float>::quiet_NaN();
  nn::ParamRefs<float> params = {&p};
  AdamState state;
  state.init(params);
  TrainConfig cfg;
  try {
    adam_step(params, state, cfg);
    FAIL("expected TrainError");
  } catch (const TrainError& e) {
    CHECK(std::string(e.what()).find("dense1.W") != std::string::npos);
  }
  CHECK(p.value(0) == 0.0f);  // nothing was mutated
  CHECK(state.t == 0);
}

TEST_CASE("first-batch loss on fresh model sits near ln 6") {
  auto records = keyword_corpus(20);
  auto splits = make_splits(records);
  auto clf = desk_classifier(records, 1);
  TrainConfig cfg = TrainConfig::preset(Variant::GloveBilstm, Scale::Desk);
  cfg.epochs = 1;
  cfg.seed = 1;
  auto history = fit(clf, splits, cfg);
  REQUIRE(history.epochs.size() == 1);
  // One epoch of small updates keeps the mean epoch loss in the ln6 ballpark.
  CHECK(history.epochs[0].train_loss ==
        doctest::Approx(std::log(6.0)).epsilon(0.25));
}

TEST_CASE("fit with epochs=0 returns an empty history, params untouched") {
  auto records = keyword_corpus(4);
  auto splits = make_splits(records);
  auto clf = desk_classifier(records, 2);
  auto before = clf.model->params();
  std::vector<float> snapshot;
  for (auto* p : before)
    for (long i = 0; i < p->value.numel(); ++i) snapshot.push_back(p->value(i));

  TrainConfig cfg = TrainConfig::preset(Variant::GloveBilstm, Scale::Desk);
  cfg.epochs = 0;
  auto history = fit(clf, splits, cfg);
  CHECK(history.epochs.empty());
  CHECK(history.best_epoch == -1);

  std::size_t k = 0;
  for (auto* p : clf.model->params())
    for (long i = 0; i < p->value.numel(); ++i)
      CHECK(p->value(i) == snapshot[k++]);
}

TEST_CASE("fit is deterministic: same seed, bit-identical parameters") {
  auto records = keyword_corpus(10);
  auto splits = make_splits(records);
  TrainConfig cfg = TrainConfig::preset(Variant::GloveBilstm, Scale::Desk);
  cfg.epochs = 2;
  cfg.seed = 9;

  auto a = desk_classifier(records, 5);
  auto ha = fit(a, splits, cfg);
  auto b = desk_classifier(records, 5);
  auto hb = fit(b, splits, cfg);

  REQUIRE(ha.epochs.size() == hb.epochs.size());
  for (std::size_t e = 0; e < ha.epochs.size(); ++e) {
    CHECK(ha.epochs[e].train_loss == hb.epochs[e].train_loss);
    CHECK(ha.epochs[e].val_accuracy == hb.epochs[e].val_accuracy);
  }
  auto pa = a.model->params(), pb = b.model->params();
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i)
    for (long j = 0; j < pa[i]->value.numel(); ++j)
      CHECK(pa[i]->value(j) == pb[i]->value(j));
}

TEST_CASE("best-epoch retention matches the history maximum") {
  auto records = keyword_corpus(15);
  auto splits = make_splits(records);
  auto clf = desk_classifier(records, 3);
  TrainConfig cfg = TrainConfig::preset(Variant::GloveBilstm, Scale::Desk);
  cfg.epochs = 4;
  cfg.seed = 3;
  auto history = fit(clf, splits, cfg);

  REQUIRE(history.best_epoch >= 0);
  double best = -1;
  long best_at = -1;
  for (const auto& e : history.epochs)
    if (e.val_accuracy > best) {
      best = e.val_accuracy;
      best_at = e.epoch;
    }
  CHECK(history.best_epoch == best_at);
  CHECK(history.best_val_accuracy == doctest::Approx(best));

  // The retained parameters actually reproduce the recorded best accuracy.
  long hits = 0;
  for (const auto& r : splits.validation) {
    auto [label, probs] = clf.predict(r.title);
    if (label == *r.label) ++hits;
  }
  double acc = static_cast<double>(hits) /
               static_cast<double>(splits.validation.size());
  CHECK(acc == doctest::Approx(history.best_val_accuracy));
}

TEST_CASE("checkpoint round trip: save, load, save again byte-identically") {
  auto records = keyword_corpus(8);
  auto splits = make_splits(records);
  auto clf = desk_classifier(records, 6);
  TrainConfig cfg = TrainConfig::preset(Variant::GloveBilstm, Scale::Desk);
  cfg.epochs = 1;
  fit(clf, splits, cfg);

  TempFile f1("ck1.lnsc"), f2("ck2.lnsc");
  CheckpointMeta meta;
  meta.epoch = 1;
  meta.val_accuracy = 0.5;
  meta.seed = 6;
  save_checkpoint(clf, f1.path, meta);

  CheckpointMeta back;
  auto loaded = load_checkpoint(f1.path, &back);
  CHECK(back.epoch == 1);
  CHECK(back.val_accuracy == 0.5);
  CHECK(back.seed == 6);
  CHECK(loaded.cfg.variant == clf.cfg.variant);
  CHECK(loaded.word_vocab.fingerprint() == clf.word_vocab.fingerprint());

  // Same predictions after the round trip.
  for (const auto& r : splits.test) {
    auto [la, pa] = clf.predict(r.title);
    auto [lb, pb] = loaded.predict(r.title);
    CHECK(la == lb);
    for (int k = 0; k < 6; ++k) CHECK(pa[k] == pb[k]);
  }

  save_checkpoint(loaded, f2.path, back);
  CHECK(slurp(f1.path) == slurp(f2.path));
}

TEST_CASE("checkpoint header magic and version are enforced") {
  auto records = keyword_corpus(4);
  auto clf = desk_classifier(records, 7);
  TempFile f("bad.lnsc");
  save_checkpoint(clf, f.path);

  auto bytes = slurp(f.path);
  REQUIRE(bytes.size() > 16);
  CHECK(std::string(bytes.data(), 4) == "LNSC");

  bytes[0] = 'X';
  {
    std::ofstream out(f.path, std::ios::binary);
    out.write(bytes.data(), static_cast<long>(bytes.size()));
  }
  CHECK_THROWS_AS(load_checkpoint(f.path), CheckpointError);
}

TEST_CASE("truncated checkpoint payload is rejected") {
  auto records = keyword_corpus(4);
  auto clf = desk_classifier(records, 8);
  TempFile f("trunc.lnsc");
  save_checkpoint(clf, f.path);
  auto bytes = slurp(f.path);
  {
    std::ofstream out(f.path, std::ios::binary);
    out.write(bytes.data(), static_cast<long>(bytes.size()) - 64);
  }
  CHECK_THROWS_AS(load_checkpoint(f.path), CheckpointError);
}

TEST_CASE("missing checkpoint file raises CheckpointError") {
  CHECK_THROWS_AS(load_checkpoint("/tmp/ytlc_train_does_not_exist.lnsc"),
                  CheckpointError);
}
