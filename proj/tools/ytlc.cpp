#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ytlc/channels.hpp"
#include "ytlc/config.hpp"
#include "ytlc/corpus.hpp"
#include "ytlc/embed.hpp"
#include "ytlc/eval.hpp"
#include "ytlc/models.hpp"
#include "ytlc/tokenize.hpp"
#include "ytlc/train.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace ytlc;

namespace {

// Exit codes: 0 success, 2 input/data error, 3 model/compatibility error,
// 4 reference-data error.
constexpr int kOk = 0;
constexpr int kDataError = 2;
constexpr int kModelError = 3;
constexpr int kRefError = 4;

int fail(int code, const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  return code;
}

FileFormat parse_format(const std::string& s, const std::string& path) {
  if (s == "jsonl") return FileFormat::Jsonl;
  if (s == "csv") return FileFormat::Csv;
  // infer from extension
  if (path.size() > 4 && path.substr(path.size() - 4) == ".csv")
    return FileFormat::Csv;
  return FileFormat::Jsonl;
}

Scale parse_scale(const std::string& s) {
  return s == "paper" ? Scale::Paper : Scale::Desk;
}

struct CommonOpts {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "TOML config file");
  cmd->add_option("--seed", o.seed, "master seed; sub-seeds are derived");
  cmd->add_option("--out", o.out_dir, "output directory");
}

void ensure_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CorpusError("cannot create output directory: " + dir);
}

TextClassifier build_from_flags(const std::string& preset,
                                const std::string& scale_s,
                                const std::string& config_path,
                                const std::string& vocab_path,
                                const std::string& vectors_path,
                                const std::string& scenario_s,
                                std::uint64_t seed, TrainConfig& tcfg) {
  auto variant = parse_variant(preset);
  if (!variant) throw CorpusError("unknown preset: " + preset);
  Scale scale = parse_scale(scale_s);
  ArchConfig acfg = ArchConfig::preset(*variant, scale);
  tcfg = TrainConfig::preset(*variant, scale);
  tcfg.seed = seed;
  if (!config_path.empty()) {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw CorpusError("cannot open config file: " + config_path);
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    auto table = toml::parse(text);
    if (toml::get_str(table, "architecture.variant"))
      acfg = ArchConfig::from_toml(text);
    if (table.count("train.learning_rate") || table.count("train.batch_size") ||
        table.count("train.epochs") || table.count("train.class_weighting")) {
      auto t2 = TrainConfig::from_toml(text);
      t2.seed = seed;
      tcfg = t2;
    }
  }
  if (!scenario_s.empty()) {
    auto sc = parse_scenario(scenario_s);
    if (!sc) throw CorpusError("unknown scenario: " + scenario_s);
    acfg.scenario = *sc;
  }

  if (acfg.variant == Variant::Bert) {
    auto vocab = load_wordpiece_vocab(vocab_path);
    return make_classifier(acfg, std::move(vocab), seed);
  }
  auto vocab = load_word_vocab(vocab_path);
  if (acfg.scenario != EmbedScenario::Random) {
    if (vectors_path.empty())
      throw CorpusError("scenario " + scenario_s + " requires --vectors");
    auto emb = load_vectors(vectors_path, vocab, acfg.embed_dim,
                            Rng::derive(seed, "embed-fallback"));
    return make_classifier(acfg, std::move(vocab), &emb, seed);
  }
  return make_classifier(acfg, std::move(vocab), nullptr, seed);
}

int cmd_prepare(const std::string& in_path, const std::string& format_s,
                std::vector<double> ratios, const CommonOpts& o) {
  if (ratios.empty()) ratios = {0.64, 0.16, 0.20};
  if (ratios.size() != 3) return fail(kDataError, "--ratios needs 3 values");
  auto records = ingest(in_path, parse_format(format_s, in_path));
  for (const auto& r : records)
    if (!r.label)
      return fail(kDataError, "unlabeled record (video_id=" + r.video_id +
                                  "); prepare requires labelled input");
  auto [cleaned, stats] = clean(std::move(records));
  if (cleaned.empty()) return fail(kDataError, "no records after cleaning");
  auto split = stratified_split(cleaned,
                                {ratios[0], ratios[1], ratios[2]}, o.seed);
  ensure_out(o.out_dir);
  write_jsonl(o.out_dir + "/train.jsonl", split.train);
  write_jsonl(o.out_dir + "/validation.jsonl", split.validation);
  write_jsonl(o.out_dir + "/test.jsonl", split.test);

  json j;
  j["total"] = stats.total;
  json per_class;
  for (int c = 0; c < 6; ++c)
    per_class[kLabelNames[static_cast<std::size_t>(c)]] =
        stats.per_class_counts[static_cast<std::size_t>(c)];
  j["per_class"] = std::move(per_class);
  j["duplicates_dropped"] = stats.duplicate_count;
  j["empty_dropped"] = stats.dropped_count;
  j["seed"] = o.seed;
  j["ratios"] = ratios;
  j["split_sizes"] = {split.train.size(), split.validation.size(),
                      split.test.size()};
  std::ofstream out(o.out_dir + "/stats.json", std::ios::binary);
  out << j.dump(2) << "\n";
  std::cout << "prepared " << stats.total << " records -> "
            << split.train.size() << "/" << split.validation.size() << "/"
            << split.test.size() << "\n";
  return kOk;
}

int cmd_vocab(const std::string& in_path, const std::string& type,
              int size, const CommonOpts& o) {
  auto records = ingest(in_path, FileFormat::Jsonl);
  ensure_out(o.out_dir);
  if (type == "wordpiece") {
    auto v = build_wordpiece_vocab(records, size);
    save_wordpiece_vocab(v, o.out_dir + "/wordpiece.vocab");
    std::cout << "wordpiece vocab: " << v.size() << " pieces\n";
  } else if (type == "word") {
    auto v = build_word_vocab(records, size);
    save_word_vocab(v, o.out_dir + "/word.vocab");
    std::cout << "word vocab: " << v.size() << " tokens\n";
  } else {
    return fail(kDataError, "unknown vocab type: " + type);
  }
  return kOk;
}

int cmd_pretrain_embed(const std::string& in_path, const std::string& vocab_path,
                       long dim, int window, int negatives, int epochs,
                       double lr, const CommonOpts& o) {
  auto records = ingest(in_path, FileFormat::Jsonl);
  auto vocab = load_word_vocab(vocab_path);
  auto emb = sgns_pretrain(records, vocab, dim, window, negatives, epochs, lr,
                           o.seed);
  ensure_out(o.out_dir);
  save_vectors(emb, vocab, o.out_dir + "/vectors.txt");
  std::cout << "pretrained " << (vocab.size() - 2) << " vectors, dim " << dim
            << "\n";
  return kOk;
}

int cmd_train(const std::string& train_path, const std::string& val_path,
              const std::string& preset, const std::string& scale_s,
              const std::string& vocab_path, const std::string& vectors_path,
              const std::string& scenario_s, const CommonOpts& o) {
  TrainConfig tcfg;
  auto clf = build_from_flags(preset, scale_s, o.config_path, vocab_path,
                              vectors_path, scenario_s, o.seed, tcfg);
  DatasetSplit splits;
  splits.train = ingest(train_path, FileFormat::Jsonl);
  if (!val_path.empty()) splits.validation = ingest(val_path, FileFormat::Jsonl);
  if (splits.train.empty()) return fail(kDataError, "empty train file");

  auto history = fit(clf, splits, tcfg);

  ensure_out(o.out_dir);
  CheckpointMeta meta;
  meta.epoch = history.best_epoch;
  meta.val_accuracy = history.best_val_accuracy;
  meta.seed = o.seed;
  save_checkpoint(clf, o.out_dir + "/checkpoint.lnsc", meta);

  json j;
  json header;
  header["variant"] = variant_name(clf.cfg.variant);
  header["learning_rate"] = tcfg.learning_rate;
  header["batch_size"] = tcfg.batch_size;
  header["epochs"] = tcfg.epochs;
  header["class_weighting"] = tcfg.class_weighting;
  header["seed"] = o.seed;
  header["bert_layers"] = clf.cfg.bert_layers;
  header["bert_hidden"] = clf.cfg.bert_hidden;
  header["bert_heads"] = clf.cfg.bert_heads;
  j["config"] = std::move(header);
  json epochs = json::array();
  for (const auto& e : history.epochs) {
    json row;
    row["epoch"] = e.epoch;
    row["train_loss"] = e.train_loss;
    row["train_accuracy"] = e.train_accuracy;
    row["val_accuracy"] = e.val_accuracy;
    row["val_weighted_f1"] = e.val_weighted_f1;
    epochs.push_back(std::move(row));
  }
  j["epochs"] = std::move(epochs);
  j["best_epoch"] = history.best_epoch;
  j["best_val_accuracy"] = history.best_val_accuracy;
  std::ofstream hist(o.out_dir + "/history.json", std::ios::binary);
  hist << j.dump(2) << "\n";

  if (!splits.validation.empty()) {
    auto [cm, rep] = evaluate(clf, splits.validation, tcfg.batch_size);
    std::ofstream rj(o.out_dir + "/val_report.json", std::ios::binary);
    rj << report_json(rep, cm);
  }
  std::cout << "trained " << history.epochs.size() << " epochs; best epoch "
            << history.best_epoch << " val accuracy "
            << history.best_val_accuracy << "\n";
  return kOk;
}

int cmd_evaluate(const std::string& ckpt_path, const std::string& test_path,
                 long batch_size, const CommonOpts& o) {
  auto clf = load_checkpoint(ckpt_path);
  auto records = ingest(test_path, FileFormat::Jsonl);
  if (records.empty()) return fail(kDataError, "empty test file");
  auto [cm, rep] = evaluate(clf, records, batch_size);
  ensure_out(o.out_dir);
  {
    std::ofstream rj(o.out_dir + "/report.json", std::ios::binary);
    rj << report_json(rep, cm);
  }
  write_confusion_csv(cm, o.out_dir + "/confusion.csv");
  render_confusion_svg(cm, o.out_dir + "/confusion.svg");
  std::cout << report_text(rep);
  // Table-7-style summary line: accuracy, weighted P/R/F1.
  std::printf("%s  accuracy %.2f  precision %.2f  recall %.2f  f1 %.2f\n",
              variant_name(clf.cfg.variant), rep.overall_accuracy,
              rep.weighted.precision, rep.weighted.recall, rep.weighted.f1);
  return kOk;
}

int cmd_predict(const std::string& ckpt_path,
                const std::vector<std::string>& titles, bool use_stdin) {
  auto clf = load_checkpoint(ckpt_path);
  std::vector<std::string> inputs = titles;
  if (use_stdin) {
    std::string line;
    while (std::getline(std::cin, line)) inputs.push_back(line);
  }
  if (inputs.empty()) return fail(kDataError, "no titles to predict");
  for (const auto& t : inputs) {
    auto [label, dist] = clf.predict(t);
    std::printf("%s", label_name(label));
    for (int c = 0; c < 6; ++c)
      std::printf("\t%.6f", dist[static_cast<std::size_t>(c)]);
    std::printf("\n");
  }
  return kOk;
}

int cmd_channel_report(const std::string& ckpt_path,
                       const std::string& channels_dir,
                       const std::string& truth_path, bool strict,
                       double split_threshold, const CommonOpts& o) {
  auto clf = load_checkpoint(ckpt_path);
  auto truth = truth_path.empty() ? AgencyGroundTruth::bundled()
                                  : AgencyGroundTruth::load_csv(truth_path);
  Predictor predict = [&clf](const TitleRecord& r) {
    return clf.predict(r.title).first;
  };
  auto mapping = CoarseMapping::standard();

  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(channels_dir))
    if (e.is_regular_file() && e.path().extension() == ".jsonl")
      files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty())
    return fail(kDataError, "no .jsonl exports in " + channels_dir);

  ensure_out(o.out_dir);
  std::vector<LeaningDistribution> dists;
  std::vector<YearlyTrend> trends;
  for (const auto& f : files) {
    auto records = ingest(f, FileFormat::Jsonl);
    if (records.empty()) return fail(kDataError, "empty export: " + f);
    auto dist = channel_distribution(predict, records);
    if (strict && !truth.labels.count(dist.channel))
      return fail(kRefError,
                  "channel missing from ground truth: " + dist.channel);
    YearlyTrend trend;
    try {
      trend = yearly_trend(predict, records);
    } catch (const ChannelError&) {
      trend.undated = static_cast<long>(records.size());  // all undated
    }
    dists.push_back(dist);
    trends.push_back(std::move(trend));
  }

  // Verdicts only for channels present in the ground truth.
  std::vector<LeaningDistribution> known;
  for (const auto& d : dists)
    if (truth.labels.count(d.channel)) known.push_back(d);
  auto summary = consistency_check(known, truth, mapping, split_threshold);
  std::map<std::string, const ChannelVerdict*> verdict_by_channel;
  for (const auto& v : summary.verdicts) verdict_by_channel[v.channel] = &v;

  for (std::size_t i = 0; i < dists.size(); ++i) {
    std::string base = o.out_dir + "/" + fs::path(files[i]).stem().string();
    auto it = verdict_by_channel.find(dists[i].channel);
    const ChannelVerdict* v =
        it == verdict_by_channel.end() ? nullptr : it->second;
    std::ofstream rj(base + ".json", std::ios::binary);
    rj << channel_report_json(dists[i], trends[i], v);
    render_channel_svg(dists[i], trends[i], base + ".svg");
  }

  json js;
  js["consistent"] = summary.consistent;
  js["split_consistent"] = summary.split;
  js["inconsistent"] = summary.inconsistent;
  json rows = json::array();
  for (const auto& v : summary.verdicts) {
    json row;
    row["channel"] = v.channel;
    row["verdict"] = verdict_name(v.verdict);
    row["ground_truth"] = coarse_name(v.truth);
    row["predicted_coarse"] = coarse_name(v.predicted_coarse);
    rows.push_back(std::move(row));
  }
  js["channels"] = std::move(rows);
  std::ofstream sj(o.out_dir + "/summary.json", std::ios::binary);
  sj << js.dump(2) << "\n";
  std::cout << "channels: " << summary.consistent << " consistent, "
            << summary.split << " split, " << summary.inconsistent
            << " inconsistent\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"YouTube title political-leaning classifier toolkit"};
  app.require_subcommand(1);

  CommonOpts common;

  // prepare
  auto* prep = app.add_subcommand("prepare", "clean, dedup, and split a corpus");
  std::string prep_in, prep_format = "auto";
  std::vector<double> prep_ratios;
  prep->add_option("--in", prep_in, "input JSONL/CSV")->required();
  prep->add_option("--format", prep_format, "jsonl|csv (default: by extension)");
  prep->add_option("--ratios", prep_ratios, "train/val/test ratios")
      ->expected(3);
  CommonOpts prep_common;
  add_common(prep, prep_common);

  // vocab
  auto* voc = app.add_subcommand("vocab", "build a word or wordpiece vocab");
  std::string voc_in, voc_type = "word";
  int voc_size = 20000;
  voc->add_option("--in", voc_in, "training JSONL")->required();
  voc->add_option("--type", voc_type, "word|wordpiece");
  voc->add_option("--size", voc_size, "vocabulary size cap");
  CommonOpts voc_common;
  add_common(voc, voc_common);

  // pretrain-embed
  auto* pre = app.add_subcommand("pretrain-embed",
                                 "train SGNS word vectors on a corpus");
  std::string pre_in, pre_vocab;
  long pre_dim = 300;
  int pre_window = 5, pre_negatives = 5, pre_epochs = 3;
  double pre_lr = 0.025;
  pre->add_option("--in", pre_in, "training JSONL")->required();
  pre->add_option("--vocab", pre_vocab, "word vocab file")->required();
  pre->add_option("--dim", pre_dim, "embedding dimension");
  pre->add_option("--window", pre_window, "max context window");
  pre->add_option("--negatives", pre_negatives, "negative samples");
  pre->add_option("--epochs", pre_epochs, "epochs");
  pre->add_option("--lr", pre_lr, "learning rate");
  CommonOpts pre_common;
  add_common(pre, pre_common);

  // train
  auto* trn = app.add_subcommand("train", "train a classifier");
  std::string trn_train, trn_val, trn_preset = "cnn", trn_scale = "desk";
  std::string trn_vocab, trn_vectors, trn_scenario;
  trn->add_option("--train", trn_train, "train JSONL")->required();
  trn->add_option("--val", trn_val, "validation JSONL");
  trn->add_option("--preset", trn_preset, "cnn|bilstm|bert");
  trn->add_option("--scale", trn_scale, "paper|desk");
  trn->add_option("--vocab", trn_vocab, "vocab file")->required();
  trn->add_option("--vectors", trn_vectors, "pretrained vector file");
  trn->add_option("--scenario", trn_scenario, "random|frozen|finetune");
  CommonOpts trn_common;
  add_common(trn, trn_common);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "evaluate a checkpoint");
  std::string ev_ckpt, ev_test;
  long ev_batch = 64;
  ev->add_option("--checkpoint", ev_ckpt, "checkpoint file")->required();
  ev->add_option("--test", ev_test, "test JSONL")->required();
  ev->add_option("--batch-size", ev_batch, "evaluation batch size");
  CommonOpts ev_common;
  add_common(ev, ev_common);

  // predict
  auto* pr = app.add_subcommand("predict", "classify titles");
  std::string pr_ckpt;
  std::vector<std::string> pr_titles;
  bool pr_stdin = false;
  pr->add_option("--checkpoint", pr_ckpt, "checkpoint file")->required();
  pr->add_option("--title", pr_titles, "title to classify (repeatable)");
  pr->add_flag("--stdin", pr_stdin, "read titles from stdin, one per line");

  // channel-report
  auto* ch = app.add_subcommand("channel-report",
                                "aggregate per-channel leanings");
  std::string ch_ckpt, ch_dir, ch_truth;
  bool ch_strict = false;
  double ch_split = 0.05;
  ch->add_option("--checkpoint", ch_ckpt, "checkpoint file")->required();
  ch->add_option("--channels", ch_dir, "directory of per-channel JSONL")
      ->required();
  ch->add_option("--truth", ch_truth,
                 "ground truth CSV (default: bundled 15-agency table)");
  ch->add_flag("--strict", ch_strict, "fail on channels missing ground truth");
  ch->add_option("--split-threshold", ch_split, "SPLIT verdict threshold");
  CommonOpts ch_common;
  add_common(ch, ch_common);

  CLI11_PARSE(app, argc, argv);

  try {
    if (prep->parsed())
      return cmd_prepare(prep_in, prep_format, prep_ratios, prep_common);
    if (voc->parsed()) return cmd_vocab(voc_in, voc_type, voc_size, voc_common);
    if (pre->parsed())
      return cmd_pretrain_embed(pre_in, pre_vocab, pre_dim, pre_window,
                                pre_negatives, pre_epochs, pre_lr, pre_common);
    if (trn->parsed())
      return cmd_train(trn_train, trn_val, trn_preset, trn_scale, trn_vocab,
                       trn_vectors, trn_scenario, trn_common);
    if (ev->parsed()) return cmd_evaluate(ev_ckpt, ev_test, ev_batch, ev_common);
    if (pr->parsed()) return cmd_predict(pr_ckpt, pr_titles, pr_stdin);
    if (ch->parsed())
      return cmd_channel_report(ch_ckpt, ch_dir, ch_truth, ch_strict, ch_split,
                                ch_common);
  } catch (const CheckpointError& e) {
    return fail(kModelError, e.what());
  } catch (const ChannelError& e) {
    return fail(kRefError, e.what());
  } catch (const CorpusError& e) {
    return fail(kDataError, e.what());
  } catch (const TokenizeError& e) {
    return fail(kDataError, e.what());
  } catch (const EvalError& e) {
    return fail(kDataError, e.what());
  } catch (const TrainError& e) {
    return fail(kDataError, e.what());
  } catch (const toml::ParseError& e) {
    return fail(kDataError, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(kModelError, e.what());
  } catch (const std::exception& e) {
    return fail(kDataError, e.what());
  }
  return kOk;
}
