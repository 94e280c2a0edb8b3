#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

const std::string kBin = YTLC_BIN;

struct Workspace {
  fs::path dir;
  explicit Workspace(const std::string& name)
      : dir(fs::temp_directory_path() / ("ytlc_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string p(const std::string& rel) const { return (dir / rel).string(); }
};

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run(const std::string& args) {
  std::string cmd = kBin + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult r;
  char buf[512];
  while (fgets(buf, sizeof(buf), pipe)) r.output += buf;
  int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Six keyword classes, several channels, some dated records.
void write_corpus(const std::string& path, int per_class) {
  static const char* kw[6] = {"comrade", "union",   "budget",
                              "culture", "liberty", "patriot"};
  static const char* labels[6] = {"FAR_LEFT", "LEFT",  "CENTER",
                                  "ANTI_WOKE", "RIGHT", "FAR_RIGHT"};
  std::ofstream out(path);
  int id = 0;
  for (int c = 0; c < 6; ++c)
    for (int i = 0; i < per_class; ++i) {
      out << "{\"video_id\":\"v" << id++ << "\",\"channel_id\":\"ch" << c
          << "\",\"title\":\"" << kw[c] << " report " << i
          << "\",\"upload_date\":\"20" << (19 + i % 3)
          << "-04-01\",\"label\":\"" << labels[c] << "\"}\n";
    }
}

void write_channel_export(const std::string& path, const std::string& channel,
                          int n) {
  std::ofstream out(path);
  for (int i = 0; i < n; ++i)
    out << "{\"video_id\":\"x" << i << "\",\"channel_id\":\"" << channel
        << "\",\"title\":\"liberty patriot clip " << i
        << "\",\"upload_date\":\"2021-06-15\"}\n";
}

}  // namespace

TEST_CASE("end-to-end: prepare, vocab, train, evaluate, predict") {
  Workspace ws("e2e");
  write_corpus(ws.p("corpus.jsonl"), 24);

  auto prep = run("prepare --in " + ws.p("corpus.jsonl") + " --seed 5 --out " +
                  ws.p("data"));
  CHECK(prep.exit_code == 0);
  CHECK(fs::exists(ws.p("data/train.jsonl")));
  CHECK(fs::exists(ws.p("data/validation.jsonl")));
  CHECK(fs::exists(ws.p("data/test.jsonl")));
  CHECK(fs::exists(ws.p("data/stats.json")));
  CHECK(slurp(ws.p("data/stats.json")).find("\"total\": 144") !=
        std::string::npos);

  // Identical rerun produces byte-identical splits.
  auto again = run("prepare --in " + ws.p("corpus.jsonl") +
                   " --seed 5 --out " + ws.p("data2"));
  CHECK(again.exit_code == 0);
  CHECK(slurp(ws.p("data/train.jsonl")) == slurp(ws.p("data2/train.jsonl")));
  CHECK(slurp(ws.p("data/test.jsonl")) == slurp(ws.p("data2/test.jsonl")));

  auto voc = run("vocab --in " + ws.p("data/train.jsonl") +
                 " --type word --size 300 --out " + ws.p("v"));
  CHECK(voc.exit_code == 0);
  REQUIRE(fs::exists(ws.p("v/word.vocab")));

  auto trn = run("train --train " + ws.p("data/train.jsonl") + " --val " +
                 ws.p("data/validation.jsonl") +
                 " --preset bilstm --scale desk --vocab " +
                 ws.p("v/word.vocab") + " --seed 7 --out " + ws.p("run"));
  CHECK(trn.exit_code == 0);
  REQUIRE(fs::exists(ws.p("run/checkpoint.lnsc")));
  CHECK(fs::exists(ws.p("run/history.json")));
  CHECK(fs::exists(ws.p("run/val_report.json")));
  CHECK(slurp(ws.p("run/history.json")).find("\"variant\": \"glove_bilstm\"") !=
        std::string::npos);

  // Same-seed retrain is byte-identical.
  auto trn2 = run("train --train " + ws.p("data/train.jsonl") + " --val " +
                  ws.p("data/validation.jsonl") +
                  " --preset bilstm --scale desk --vocab " +
                  ws.p("v/word.vocab") + " --seed 7 --out " + ws.p("run2"));
  CHECK(trn2.exit_code == 0);
  CHECK(slurp(ws.p("run/checkpoint.lnsc")) ==
        slurp(ws.p("run2/checkpoint.lnsc")));

  auto ev = run("evaluate --checkpoint " + ws.p("run/checkpoint.lnsc") +
                " --test " + ws.p("data/test.jsonl") + " --out " + ws.p("ev"));
  CHECK(ev.exit_code == 0);
  CHECK(fs::exists(ws.p("ev/report.json")));
  CHECK(fs::exists(ws.p("ev/confusion.csv")));
  CHECK(fs::exists(ws.p("ev/confusion.svg")));
  CHECK(ev.output.find("accuracy") != std::string::npos);

  auto pr = run("predict --checkpoint " + ws.p("run/checkpoint.lnsc") +
                " --title \"liberty patriot hour\" --title \"budget news\"");
  CHECK(pr.exit_code == 0);
  std::istringstream lines(pr.output);
  std::string line;
  int n_lines = 0;
  while (std::getline(lines, line)) {
    ++n_lines;
    // LABEL\tp0..p5: seven tab-separated fields, probabilities sum to ~1.
    std::istringstream fields(line);
    std::string label;
    REQUIRE(std::getline(fields, label, '\t'));
    double sum = 0, p = 0;
    int n_probs = 0;
    std::string tok;
    while (std::getline(fields, tok, '\t')) {
      p = std::stod(tok);
      CHECK(p >= 0.0);
      sum += p;
      ++n_probs;
    }
    CHECK(n_probs == 6);
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-4));
  }
  CHECK(n_lines == 2);

  // stdin mode: three lines in, three predictions out.
  std::string stdin_cmd = "printf 'a\\nb\\nc\\n' | " + kBin +
                          " predict --checkpoint " +
                          ws.p("run/checkpoint.lnsc") + " --stdin 2>&1";
  FILE* pipe = popen(stdin_cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[256];
  while (fgets(buf, sizeof(buf), pipe)) out += buf;
  CHECK(WEXITSTATUS(pclose(pipe)) == 0);
  CHECK(std::count(out.begin(), out.end(), '\n') == 3);
}

TEST_CASE("prepare rejects unlabeled input with exit code 2") {
  Workspace ws("unlabeled");
  {
    std::ofstream out(ws.p("bad.jsonl"));
    out << "{\"video_id\":\"a\",\"channel_id\":\"c\",\"title\":\"hello\"}\n";
  }
  auto r = run("prepare --in " + ws.p("bad.jsonl") + " --out " + ws.p("out"));
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("error") != std::string::npos);
}

TEST_CASE("malformed input data exits with code 2") {
  Workspace ws("malformed");
  {
    std::ofstream out(ws.p("bad.jsonl"));
    out << "{\"video_id\":\"a\",\"channel_id\":\"c\",\"title\":\"x\","
           "\"label\":\"CENTRIST\"}\n";
  }
  auto r = run("prepare --in " + ws.p("bad.jsonl") + " --out " + ws.p("out"));
  CHECK(r.exit_code == 2);

  auto missing = run("prepare --in " + ws.p("nope.jsonl") + " --out " +
                     ws.p("out"));
  CHECK(missing.exit_code == 2);
}

TEST_CASE("corrupt checkpoint exits with code 3") {
  Workspace ws("corrupt");
  write_corpus(ws.p("t.jsonl"), 2);
  {
    std::ofstream out(ws.p("junk.lnsc"), std::ios::binary);
    out << "XXXXnot a checkpoint";
  }
  auto r = run("evaluate --checkpoint " + ws.p("junk.lnsc") + " --test " +
               ws.p("t.jsonl") + " --out " + ws.p("out"));
  CHECK(r.exit_code == 3);
}

TEST_CASE("channel-report writes per-channel artifacts and a summary") {
  Workspace ws("channels");
  write_corpus(ws.p("corpus.jsonl"), 12);
  run("prepare --in " + ws.p("corpus.jsonl") + " --seed 1 --out " +
      ws.p("data"));
  run("vocab --in " + ws.p("data/train.jsonl") +
      " --type word --size 200 --out " + ws.p("v"));
  auto trn = run("train --train " + ws.p("data/train.jsonl") +
                 " --preset bilstm --scale desk --vocab " +
                 ws.p("v/word.vocab") + " --seed 2 --out " + ws.p("run"));
  REQUIRE(trn.exit_code == 0);

  fs::create_directories(ws.p("exports"));
  write_channel_export(ws.p("exports/acme.jsonl"), "Acme News", 8);
  write_channel_export(ws.p("exports/beacon.jsonl"), "Beacon Wire", 8);
  {
    std::ofstream out(ws.p("truth.csv"));
    out << "channel,label\n";
    out << "Acme News,RIGHT\n";
    out << "Beacon Wire,CENTER\n";
  }

  auto rep = run("channel-report --checkpoint " + ws.p("run/checkpoint.lnsc") +
                 " --channels " + ws.p("exports") + " --truth " +
                 ws.p("truth.csv") + " --out " + ws.p("cr"));
  CHECK(rep.exit_code == 0);
  CHECK(fs::exists(ws.p("cr/acme.json")));
  CHECK(fs::exists(ws.p("cr/acme.svg")));
  CHECK(fs::exists(ws.p("cr/beacon.json")));
  CHECK(fs::exists(ws.p("cr/summary.json")));
  auto summary = slurp(ws.p("cr/summary.json"));
  CHECK(summary.find("Acme News") != std::string::npos);
  CHECK(summary.find("Beacon Wire") != std::string::npos);

  // --strict with a channel absent from the reference data: exit code 4.
  write_channel_export(ws.p("exports/ghost.jsonl"), "Ghost Channel", 4);
  auto strict = run("channel-report --checkpoint " +
                    ws.p("run/checkpoint.lnsc") + " --channels " +
                    ws.p("exports") + " --truth " + ws.p("truth.csv") +
                    " --strict --out " + ws.p("cr2"));
  CHECK(strict.exit_code == 4);
}
