#pragma once

#include <array>
#include <string>
#include <vector>

#include "ytlc/corpus.hpp"
#include "ytlc/models.hpp"

namespace ytlc {

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 6x6 count table; rows are true classes, columns predicted.
struct ConfusionMatrix {
  std::array<std::array<long, 6>, 6> counts{};

  long& at(int t, int p) {
    return counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  long at(int t, int p) const {
    return counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
  }
  long total() const;
  long row_total(int t) const;
  long col_total(int p) const;
  void merge(const ConfusionMatrix& o);
  bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(const std::vector<int>& true_labels,
                          const std::vector<int>& predicted_labels);

struct ClassMetrics {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  double accuracy = 0;  // alias of recall, mirroring the report layout
  long support = 0;
  bool degenerate = false;  // any zero-denominator metric defined as 0
  /// Of this row's errors, the fraction landing in an ordinally adjacent
  /// class; 0 with degenerate semantics when the row has no errors.
  double adjacent_error_fraction = 0;
};

struct ClassificationReport {
  std::array<ClassMetrics, 6> per_class{};
  ClassMetrics weighted;  // support-weighted averages; recall == accuracy
  double overall_accuracy = 0;
  long total = 0;
};

/// Throws EvalError when the matrix is empty.
ClassificationReport report(const ConfusionMatrix& m);

std::string report_text(const ClassificationReport& r);
std::string report_json(const ClassificationReport& r,
                        const ConfusionMatrix& m);

void write_confusion_csv(const ConfusionMatrix& m, const std::string& path);
ConfusionMatrix read_confusion_csv(const std::string& path);

/// Figure-3-style heat map: per row, [min,max] split into 5 equal-width bins
/// (single top bin when the range is zero-width); darker = higher; counts
/// annotated.
void render_confusion_svg(const ConfusionMatrix& m, const std::string& path);

/// Eval-mode batched inference over labelled records. Metrics are identical
/// for any batch_size and for parallel (sharded-and-merged) evaluation.
std::pair<ConfusionMatrix, ClassificationReport> evaluate(
    TextClassifier& clf, const std::vector<TitleRecord>& records,
    long batch_size = 64, int shards = 1);

}  // namespace ytlc
