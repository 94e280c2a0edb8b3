#include "ytlc/embed.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ytlc/nn.hpp"
#include "ytlc/rng.hpp"

namespace ytlc {

namespace {
constexpr double kInitStddev = 0.01;
}

EmbeddingMatrix init_random(const WordVocab& vocab, long dim,
                            std::uint64_t seed) {
  EmbeddingMatrix m;
  m.dim = dim;
  m.source = EmbedSource::Random;
  m.matrix = TensorF({vocab.size(), dim});
  Rng rng(Rng::derive(seed, "embed-init"));
  for (long r = 0; r < m.matrix.dim(0); ++r) {
    if (r == WordVocab::kPad) {
      // PAD row stays zero but the stream still advances, so every other
      // row is independent of whether PAD exists.
      for (long d = 0; d < dim; ++d) rng.normal();
      continue;
    }
    for (long d = 0; d < dim; ++d)
      m.matrix(r, d) = static_cast<float>(rng.normal() * kInitStddev);
  }
  return m;
}

EmbeddingMatrix load_vectors(const std::string& path, const WordVocab& vocab,
                             long dim, std::uint64_t seed) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TokenizeError("cannot open vector file: " + path);

  EmbeddingMatrix m = init_random(vocab, dim, seed);
  m.source = EmbedSource::Loaded;

  std::string line;
  long lineno = 0;
  long covered = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    if (first) {
      first = false;
      // Optional "count dim" header.
      long a, b;
      char extra;
      std::istringstream probe(line);
      if ((probe >> a >> b) && !(probe >> extra)) {
        if (b != dim)
          throw TokenizeError("vector file header dim " + std::to_string(b) +
                              " does not match expected " +
                              std::to_string(dim));
        continue;
      }
    }
    std::string word;
    ss >> word;
    std::vector<float> vals;
    vals.reserve(static_cast<std::size_t>(dim));
    double v;
    while (ss >> v) vals.push_back(static_cast<float>(v));
    if (static_cast<long>(vals.size()) != dim)
      throw TokenizeError("vector file line " + std::to_string(lineno) +
                          ": expected " + std::to_string(dim) +
                          " values, got " + std::to_string(vals.size()));
    auto it = vocab.index.find(word);
    if (it == vocab.index.end() || it->second < 2) continue;
    for (long d = 0; d < dim; ++d)
      m.matrix(it->second, d) = vals[static_cast<std::size_t>(d)];
    ++covered;
  }
  long content_rows = vocab.size() - 2;
  m.coverage = content_rows > 0
                   ? static_cast<double>(covered) / static_cast<double>(content_rows)
                   : 0.0;
  return m;
}

void save_vectors(const EmbeddingMatrix& m, const WordVocab& vocab,
                  const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw TokenizeError("cannot write vector file: " + path);
  out << (vocab.size() - 2) << ' ' << m.dim << '\n';
  char buf[32];
  for (int r = 2; r < vocab.size(); ++r) {
    out << vocab.tokens[static_cast<std::size_t>(r)];
    for (long d = 0; d < m.dim; ++d) {
      std::snprintf(buf, sizeof(buf), " %.9g",
                    static_cast<double>(m.matrix(r, d)));
      out << buf;
    }
    out << '\n';
  }
}

std::vector<double> sgns_noise_distribution(const WordVocab& vocab) {
  std::vector<double> p(static_cast<std::size_t>(vocab.size()), 0.0);
  double sum = 0;
  for (int i = 2; i < vocab.size(); ++i) {
    double w = std::pow(
        static_cast<double>(vocab.frequency[static_cast<std::size_t>(i)]),
        0.75);
    p[static_cast<std::size_t>(i)] = w;
    sum += w;
  }
  if (sum > 0)
    for (auto& x : p) x /= sum;
  return p;
}

EmbeddingMatrix sgns_pretrain(const std::vector<TitleRecord>& records,
                              const WordVocab& vocab, long dim, int window,
                              int negatives, int epochs, double lr,
                              std::uint64_t seed) {
  if (records.empty()) throw TokenizeError("sgns: empty corpus");

  EmbeddingMatrix m = init_random(vocab, dim, seed);
  if (epochs == 0) return m;  // source stays Random: nothing was learned
  m.source = EmbedSource::PretrainedLocal;

  // Context matrix, zero-initialized as usual for SGNS.
  TensorF ctx({vocab.size(), dim});

  // Cumulative noise distribution for inverse-CDF sampling.
  auto noise = sgns_noise_distribution(vocab);
  std::vector<double> cum(noise.size());
  double acc = 0;
  for (std::size_t i = 0; i < noise.size(); ++i) {
    acc += noise[i];
    cum[i] = acc;
  }
  auto sample_noise = [&](Rng& rng) {
    double u = rng.uniform() * acc;
    auto it = std::lower_bound(cum.begin(), cum.end(), u);
    return static_cast<int>(it - cum.begin());
  };

  // Token streams per title.
  std::vector<std::vector<int>> sentences;
  sentences.reserve(records.size());
  for (const auto& r : records) {
    std::vector<int> ids;
    for (auto& w : word_tokens(r.title)) {
      int id = vocab.lookup(w);
      if (id != WordVocab::kPad) ids.push_back(id);
    }
    if (ids.size() >= 2) sentences.push_back(std::move(ids));
  }

  Rng rng(Rng::derive(seed, "sgns-train"));
  std::vector<float> grad_center(static_cast<std::size_t>(dim));
  auto flr = static_cast<float>(lr);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (const auto& sent : sentences) {
      long n = static_cast<long>(sent.size());
      for (long t = 0; t < n; ++t) {
        int center = sent[static_cast<std::size_t>(t)];
        long b = 1 + static_cast<long>(rng.below(static_cast<std::uint64_t>(window)));
        for (long o = std::max<long>(0, t - b); o <= std::min(n - 1, t + b); ++o) {
          if (o == t) continue;
          int target = sent[static_cast<std::size_t>(o)];
          std::fill(grad_center.begin(), grad_center.end(), 0.0f);
          float* vc = m.matrix.row(center);
          // one positive + `negatives` noise samples
          for (int k = 0; k <= negatives; ++k) {
            int out = k == 0 ? target : sample_noise(rng);
            float label = k == 0 ? 1.0f : 0.0f;
            float* vo = ctx.row(out);
            float score = nn::sigmoid_scalar(
                kern::dot(vc, vo, static_cast<std::size_t>(dim)));
            float g = (score - label) * flr;
            kern::axpy(-g, vo, grad_center.data(),
                       static_cast<std::size_t>(dim));
            kern::axpy(-g, vc, vo, static_cast<std::size_t>(dim));
          }
          kern::axpy(1.0f, grad_center.data(), vc,
                     static_cast<std::size_t>(dim));
        }
      }
    }
  }
  return m;
}

}  // namespace ytlc
