#include "ytlc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ytlc {

using json = nlohmann::ordered_json;

long ConfusionMatrix::total() const {
  long n = 0;
  for (int t = 0; t < 6; ++t)
    for (int p = 0; p < 6; ++p) n += at(t, p);
  return n;
}

long ConfusionMatrix::row_total(int t) const {
  long n = 0;
  for (int p = 0; p < 6; ++p) n += at(t, p);
  return n;
}

long ConfusionMatrix::col_total(int p) const {
  long n = 0;
  for (int t = 0; t < 6; ++t) n += at(t, p);
  return n;
}

void ConfusionMatrix::merge(const ConfusionMatrix& o) {
  for (int t = 0; t < 6; ++t)
    for (int p = 0; p < 6; ++p) at(t, p) += o.at(t, p);
}

ConfusionMatrix confusion(const std::vector<int>& true_labels,
                          const std::vector<int>& predicted_labels) {
  if (true_labels.size() != predicted_labels.size())
    throw EvalError("confusion: label list length mismatch");
  ConfusionMatrix m;
  for (std::size_t i = 0; i < true_labels.size(); ++i) {
    int t = true_labels[i], p = predicted_labels[i];
    if (t < 0 || t >= 6 || p < 0 || p >= 6)
      throw EvalError("confusion: label out of range");
    m.at(t, p)++;
  }
  return m;
}

ClassificationReport report(const ConfusionMatrix& m) {
  long total = m.total();
  if (total == 0) throw EvalError("report: empty confusion matrix");

  ClassificationReport r;
  r.total = total;
  long trace = 0;
  for (int c = 0; c < 6; ++c) trace += m.at(c, c);
  r.overall_accuracy = static_cast<double>(trace) / static_cast<double>(total);

  for (int c = 0; c < 6; ++c) {
    auto& cm = r.per_class[static_cast<std::size_t>(c)];
    long row = m.row_total(c), col = m.col_total(c), tp = m.at(c, c);
    cm.support = row;
    if (col > 0) {
      cm.precision = static_cast<double>(tp) / static_cast<double>(col);
    } else {
      cm.degenerate = true;
    }
    if (row > 0) {
      cm.recall = static_cast<double>(tp) / static_cast<double>(row);
    } else {
      cm.degenerate = true;
    }
    if (cm.precision + cm.recall > 0) {
      cm.f1 = 2 * cm.precision * cm.recall / (cm.precision + cm.recall);
    } else {
      cm.degenerate = true;
    }
    cm.accuracy = cm.recall;
    long errors = row - tp;
    if (errors > 0) {
      long adjacent = 0;
      if (c - 1 >= 0) adjacent += m.at(c, c - 1);
      if (c + 1 < 6) adjacent += m.at(c, c + 1);
      cm.adjacent_error_fraction =
          static_cast<double>(adjacent) / static_cast<double>(errors);
    }
  }

  for (int c = 0; c < 6; ++c) {
    const auto& cm = r.per_class[static_cast<std::size_t>(c)];
    double w = static_cast<double>(cm.support) / static_cast<double>(total);
    r.weighted.precision += w * cm.precision;
    r.weighted.recall += w * cm.recall;
    r.weighted.f1 += w * cm.f1;
    r.weighted.adjacent_error_fraction += w * cm.adjacent_error_fraction;
    r.weighted.degenerate = r.weighted.degenerate || cm.degenerate;
  }
  // Support-weighted recall telescopes to trace/total; compute it that way
  // so the identity with overall accuracy holds exactly, not just to an ulp.
  r.weighted.recall = r.overall_accuracy;
  r.weighted.accuracy = r.weighted.recall;
  r.weighted.support = total;
  return r;
}

std::string report_text(const ClassificationReport& r) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-10s %9s %9s %9s %9s %9s\n", "class",
                "accuracy", "precision", "recall", "f1", "support");
  out << buf;
  auto line = [&](const char* name, const ClassMetrics& m) {
    std::snprintf(buf, sizeof(buf), "%-10s %9.2f %9.2f %9.2f %9.2f %9ld%s\n",
                  name, m.accuracy, m.precision, m.recall, m.f1, m.support,
                  m.degenerate ? "  [degenerate->0]" : "");
    out << buf;
  };
  for (int c = 0; c < 6; ++c)
    line(kLabelNames[static_cast<std::size_t>(c)],
         r.per_class[static_cast<std::size_t>(c)]);
  line("WEIGHTED", r.weighted);
  std::snprintf(buf, sizeof(buf), "overall accuracy %.4f over %ld records\n",
                r.overall_accuracy, r.total);
  out << buf;
  return out.str();
}

std::string report_json(const ClassificationReport& r,
                        const ConfusionMatrix& m) {
  json j;
  json classes = json::array();
  for (int c = 0; c < 6; ++c) {
    const auto& cm = r.per_class[static_cast<std::size_t>(c)];
    json row;
    row["label"] = kLabelNames[static_cast<std::size_t>(c)];
    row["accuracy"] = cm.accuracy;
    row["precision"] = cm.precision;
    row["recall"] = cm.recall;
    row["f1"] = cm.f1;
    row["support"] = cm.support;
    row["degenerate"] = cm.degenerate;
    row["adjacent_error_fraction"] = cm.adjacent_error_fraction;
    classes.push_back(std::move(row));
  }
  j["classes"] = std::move(classes);
  json w;
  w["accuracy"] = r.weighted.accuracy;
  w["precision"] = r.weighted.precision;
  w["recall"] = r.weighted.recall;
  w["f1"] = r.weighted.f1;
  w["support"] = r.weighted.support;
  j["weighted"] = std::move(w);
  j["overall_accuracy"] = r.overall_accuracy;
  j["total"] = r.total;
  json rows = json::array();
  for (int t = 0; t < 6; ++t) {
    json row = json::array();
    for (int p = 0; p < 6; ++p) row.push_back(m.at(t, p));
    rows.push_back(std::move(row));
  }
  j["confusion"] = std::move(rows);
  return j.dump(2) + "\n";
}

void write_confusion_csv(const ConfusionMatrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw EvalError("cannot write confusion CSV: " + path);
  out << "true\\pred";
  for (int p = 0; p < 6; ++p) out << ',' << kLabelNames[static_cast<std::size_t>(p)];
  out << '\n';
  for (int t = 0; t < 6; ++t) {
    out << kLabelNames[static_cast<std::size_t>(t)];
    for (int p = 0; p < 6; ++p) out << ',' << m.at(t, p);
    out << '\n';
  }
}

ConfusionMatrix read_confusion_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw EvalError("cannot open confusion CSV: " + path);
  std::string line;
  if (!std::getline(in, line)) throw EvalError("confusion CSV: missing header");
  ConfusionMatrix m;
  for (int t = 0; t < 6; ++t) {
    if (!std::getline(in, line))
      throw EvalError("confusion CSV: truncated at row " + std::to_string(t));
    std::istringstream ss(line);
    std::string cell;
    if (!std::getline(ss, cell, ','))
      throw EvalError("confusion CSV: bad row " + std::to_string(t));
    if (cell != kLabelNames[static_cast<std::size_t>(t)])
      throw EvalError("confusion CSV: unexpected row label " + cell);
    for (int p = 0; p < 6; ++p) {
      if (!std::getline(ss, cell, ','))
        throw EvalError("confusion CSV: short row " + std::to_string(t));
      m.at(t, p) = std::stol(cell);
    }
  }
  return m;
}

void render_confusion_svg(const ConfusionMatrix& m, const std::string& path) {
  if (m.total() == 0) throw EvalError("render: empty confusion matrix");
  constexpr int kCell = 64, kMargin = 110, kBins = 5;
  // light -> dark ramp; bin index picks the fill
  static const char* kFills[kBins] = {"#f1f6fb", "#c6dbef", "#85bcdb",
                                      "#3182bd", "#08519c"};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw EvalError("cannot write SVG: " + path);
  int wpx = kMargin + 6 * kCell + 20, hpx = kMargin + 6 * kCell + 20;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << wpx
      << "\" height=\"" << hpx << "\">\n";
  out << "<text x=\"8\" y=\"20\" font-size=\"13\">true \\ predicted</text>\n";
  for (int c = 0; c < 6; ++c) {
    out << "<text x=\"" << (kMargin + c * kCell + 6) << "\" y=\""
        << (kMargin - 8) << "\" font-size=\"10\">"
        << kLabelNames[static_cast<std::size_t>(c)] << "</text>\n";
    out << "<text x=\"8\" y=\"" << (kMargin + c * kCell + kCell / 2)
        << "\" font-size=\"10\">" << kLabelNames[static_cast<std::size_t>(c)]
        << "</text>\n";
  }
  for (int t = 0; t < 6; ++t) {
    long lo = m.at(t, 0), hi = m.at(t, 0);
    for (int p = 1; p < 6; ++p) {
      lo = std::min(lo, m.at(t, p));
      hi = std::max(hi, m.at(t, p));
    }
    for (int p = 0; p < 6; ++p) {
      int bin;
      if (hi == lo) {
        bin = kBins - 1;  // zero-width range: single top bin
      } else {
        double frac = static_cast<double>(m.at(t, p) - lo) /
                      static_cast<double>(hi - lo);
        bin = std::min(kBins - 1, static_cast<int>(frac * kBins));
      }
      int x = kMargin + p * kCell, y = kMargin + t * kCell;
      out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << kCell
          << "\" height=\"" << kCell << "\" fill=\"" << kFills[bin]
          << "\" stroke=\"#555\"/>\n";
      const char* text_fill = bin >= 3 ? "#ffffff" : "#111111";
      out << "<text x=\"" << (x + kCell / 2) << "\" y=\"" << (y + kCell / 2 + 4)
          << "\" font-size=\"12\" text-anchor=\"middle\" fill=\"" << text_fill
          << "\">" << m.at(t, p) << "</text>\n";
    }
  }
  out << "</svg>\n";
}

std::pair<ConfusionMatrix, ClassificationReport> evaluate(
    TextClassifier& clf, const std::vector<TitleRecord>& records,
    long batch_size, int shards) {
  if (records.empty()) throw EvalError("evaluate: empty record set");
  if (batch_size < 1) throw EvalError("evaluate: batch_size must be >= 1");
  if (shards < 1) throw EvalError("evaluate: shards must be >= 1");

  long n = static_cast<long>(records.size());
  std::vector<TokenSequence> seqs;
  std::vector<int> targets;
  seqs.reserve(records.size());
  targets.reserve(records.size());
  for (const auto& r : records) {
    if (!r.label) throw EvalError("evaluate: unlabeled record");
    seqs.push_back(clf.encode(r.title));
    targets.push_back(static_cast<int>(*r.label));
  }

  // Shards are disjoint contiguous slices evaluated independently and merged;
  // integer additivity makes the merged matrix equal the serial one exactly.
  ConfusionMatrix merged;
  long per = (n + shards - 1) / shards;
  for (int s = 0; s < shards; ++s) {
    long lo = static_cast<long>(s) * per, hi = std::min(n, lo + per);
    ConfusionMatrix shard;
    for (long start = lo; start < hi; start += batch_size) {
      long end = std::min(hi, start + batch_size);
      std::vector<TokenSequence> batch(seqs.begin() + start,
                                       seqs.begin() + end);
      auto probs = clf.model->forward(batch, nn::Mode::Eval);
      for (long i = 0; i < end - start; ++i)
        shard.at(targets[static_cast<std::size_t>(start + i)],
                 argmax_label(probs.row(i)))++;
    }
    merged.merge(shard);
  }
  return {merged, report(merged)};
}

}  // namespace ytlc
