#pragma once

#include <array>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ytlc/corpus.hpp"

namespace ytlc {

class ChannelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-title prediction interface; real classifiers and test stubs both
/// plug in here.
using Predictor = std::function<LeaningLabel(const TitleRecord&)>;

enum class Coarse { Left = 0, Center = 1, Right = 2 };

const char* coarse_name(Coarse c);
std::optional<Coarse> parse_coarse(std::string_view s);

/// Total map from the six fine labels to Left/Center/Right. The default
/// folds Anti-Woke rightward; configurable because that is judgment, not
/// ground truth.
struct CoarseMapping {
  std::array<Coarse, 6> map{};

  Coarse operator()(LeaningLabel l) const {
    return map[static_cast<std::size_t>(l)];
  }
  static CoarseMapping standard();
};

struct LeaningDistribution {
  std::string channel;
  std::array<double, 6> proportions{};
  long n = 0;
  LeaningLabel dominant = LeaningLabel::FarLeft;

  std::array<double, 3> coarse_masses(const CoarseMapping& m) const;
};

LeaningDistribution channel_distribution(const Predictor& predict,
                                         const std::vector<TitleRecord>& records);

/// channel name -> coarse label; Table-9-shaped reference data.
struct AgencyGroundTruth {
  std::map<std::string, Coarse> labels;

  static AgencyGroundTruth load_csv(const std::string& path);
  /// The bundled 15-agency default.
  static AgencyGroundTruth bundled();
};

enum class Verdict { Consistent, SplitConsistent, Inconsistent };
const char* verdict_name(Verdict v);

struct ChannelVerdict {
  std::string channel;
  Verdict verdict = Verdict::Inconsistent;
  Coarse truth = Coarse::Center;
  Coarse predicted_coarse = Coarse::Center;
};

struct ConsistencySummary {
  std::vector<ChannelVerdict> verdicts;
  long consistent = 0;
  long split = 0;
  long inconsistent = 0;
};

/// CONSISTENT iff mapping(dominant) equals the ground-truth coarse label;
/// otherwise SPLIT when the truth is CENTER and the top two coarse masses
/// are within split_threshold; otherwise INCONSISTENT. Unknown channels
/// throw ChannelError.
ConsistencySummary consistency_check(
    const std::vector<LeaningDistribution>& distributions,
    const AgencyGroundTruth& truth, const CoarseMapping& mapping,
    double split_threshold = 0.05);

struct YearBucket {
  int year = 0;
  LeaningDistribution dist;
  bool low_support = false;  // n < 20
};

struct YearlyTrend {
  std::vector<YearBucket> buckets;  // ascending by year
  long undated = 0;
};

YearlyTrend yearly_trend(const Predictor& predict,
                         const std::vector<TitleRecord>& records);

std::string channel_report_json(const LeaningDistribution& dist,
                                const YearlyTrend& trend,
                                const ChannelVerdict* verdict);

/// Stacked-bar chart: one bar for the whole channel plus one per year.
void render_channel_svg(const LeaningDistribution& dist,
                        const YearlyTrend& trend, const std::string& path);

}  // namespace ytlc
