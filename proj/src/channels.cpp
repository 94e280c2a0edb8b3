#include "ytlc/channels.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ytlc {

using json = nlohmann::ordered_json;

const char* coarse_name(Coarse c) {
  switch (c) {
    case Coarse::Left: return "LEFT";
    case Coarse::Center: return "CENTER";
    case Coarse::Right: return "RIGHT";
  }
  return "?";
}

std::optional<Coarse> parse_coarse(std::string_view s) {
  if (s == "LEFT") return Coarse::Left;
  if (s == "CENTER") return Coarse::Center;
  if (s == "RIGHT") return Coarse::Right;
  return std::nullopt;
}

CoarseMapping CoarseMapping::standard() {
  CoarseMapping m;
  m.map[static_cast<std::size_t>(LeaningLabel::FarLeft)] = Coarse::Left;
  m.map[static_cast<std::size_t>(LeaningLabel::Left)] = Coarse::Left;
  m.map[static_cast<std::size_t>(LeaningLabel::Center)] = Coarse::Center;
  m.map[static_cast<std::size_t>(LeaningLabel::AntiWoke)] = Coarse::Right;
  m.map[static_cast<std::size_t>(LeaningLabel::Right)] = Coarse::Right;
  m.map[static_cast<std::size_t>(LeaningLabel::FarRight)] = Coarse::Right;
  return m;
}

std::array<double, 3> LeaningDistribution::coarse_masses(
    const CoarseMapping& m) const {
  std::array<double, 3> out{};
  for (int c = 0; c < 6; ++c)
    out[static_cast<std::size_t>(m(static_cast<LeaningLabel>(c)))] +=
        proportions[static_cast<std::size_t>(c)];
  return out;
}

LeaningDistribution channel_distribution(
    const Predictor& predict, const std::vector<TitleRecord>& records) {
  if (records.empty()) throw ChannelError("channel_distribution: no records");
  LeaningDistribution d;
  d.channel = records.front().channel_id;
  d.n = static_cast<long>(records.size());
  std::array<long, 6> counts{};
  for (const auto& r : records)
    counts[static_cast<std::size_t>(predict(r))]++;
  int best = 0;
  for (int c = 0; c < 6; ++c) {
    d.proportions[static_cast<std::size_t>(c)] =
        static_cast<double>(counts[static_cast<std::size_t>(c)]) /
        static_cast<double>(d.n);
    if (counts[static_cast<std::size_t>(c)] >
        counts[static_cast<std::size_t>(best)])
      best = c;
  }
  d.dominant = static_cast<LeaningLabel>(best);
  return d;
}

AgencyGroundTruth AgencyGroundTruth::load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ChannelError("cannot open ground truth CSV: " + path);
  AgencyGroundTruth gt;
  std::string line;
  long lineno = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line == "channel,label") continue;  // header optional
    }
    auto comma = line.rfind(',');
    if (comma == std::string::npos)
      throw ChannelError("ground truth CSV line " + std::to_string(lineno) +
                         ": expected channel,label");
    std::string channel = line.substr(0, comma);
    auto coarse = parse_coarse(line.substr(comma + 1));
    if (!coarse)
      throw ChannelError("ground truth CSV line " + std::to_string(lineno) +
                         ": unknown label " + line.substr(comma + 1));
    if (!gt.labels.emplace(channel, *coarse).second)
      throw ChannelError("ground truth CSV line " + std::to_string(lineno) +
                         ": duplicate channel " + channel);
  }
  if (gt.labels.empty()) throw ChannelError("ground truth CSV is empty");
  return gt;
}

AgencyGroundTruth AgencyGroundTruth::bundled() {
  AgencyGroundTruth gt;
  for (const char* c : {"Forbes", "The Hill", "Reuters",
                        "The Wall Street Journal", "BBC news"})
    gt.labels.emplace(c, Coarse::Center);
  for (const char* c : {"MSNBC", "CNN", "New York Times", "NBC news",
                        "The Guardian"})
    gt.labels.emplace(c, Coarse::Left);
  for (const char* c : {"Fox news", "New York post", "CBN news", "Blaze media",
                        "News Max"})
    gt.labels.emplace(c, Coarse::Right);
  return gt;
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Consistent: return "CONSISTENT";
    case Verdict::SplitConsistent: return "SPLIT_CONSISTENT";
    case Verdict::Inconsistent: return "INCONSISTENT";
  }
  return "?";
}

ConsistencySummary consistency_check(
    const std::vector<LeaningDistribution>& distributions,
    const AgencyGroundTruth& truth, const CoarseMapping& mapping,
    double split_threshold) {
  ConsistencySummary summary;
  for (const auto& d : distributions) {
    auto it = truth.labels.find(d.channel);
    if (it == truth.labels.end())
      throw ChannelError("consistency_check: channel not in ground truth: " +
                         d.channel);
    ChannelVerdict v;
    v.channel = d.channel;
    v.truth = it->second;
    v.predicted_coarse = mapping(d.dominant);
    if (v.predicted_coarse == v.truth) {
      v.verdict = Verdict::Consistent;
    } else if (v.truth == Coarse::Center) {
      auto masses = d.coarse_masses(mapping);
      std::array<double, 3> sorted = masses;
      std::sort(sorted.begin(), sorted.end(), std::greater<>());
      v.verdict = sorted[0] - sorted[1] <= split_threshold
                      ? Verdict::SplitConsistent
                      : Verdict::Inconsistent;
    } else {
      v.verdict = Verdict::Inconsistent;
    }
    switch (v.verdict) {
      case Verdict::Consistent: summary.consistent++; break;
      case Verdict::SplitConsistent: summary.split++; break;
      case Verdict::Inconsistent: summary.inconsistent++; break;
    }
    summary.verdicts.push_back(std::move(v));
  }
  return summary;
}

YearlyTrend yearly_trend(const Predictor& predict,
                         const std::vector<TitleRecord>& records) {
  YearlyTrend trend;
  std::map<int, std::vector<const TitleRecord*>> by_year;
  for (const auto& r : records) {
    if (!r.upload_date) {
      trend.undated++;
      continue;
    }
    by_year[r.upload_date->year].push_back(&r);
  }
  if (by_year.empty()) throw ChannelError("yearly_trend: no dated records");
  for (const auto& [year, recs] : by_year) {
    YearBucket b;
    b.year = year;
    std::vector<TitleRecord> slice;
    slice.reserve(recs.size());
    for (const auto* r : recs) slice.push_back(*r);
    b.dist = channel_distribution(predict, slice);
    b.low_support = b.dist.n < 20;
    trend.buckets.push_back(std::move(b));
  }
  return trend;
}

namespace {

json dist_to_json(const LeaningDistribution& d) {
  json j;
  j["channel"] = d.channel;
  j["n"] = d.n;
  json props;
  for (int c = 0; c < 6; ++c)
    props[kLabelNames[static_cast<std::size_t>(c)]] =
        d.proportions[static_cast<std::size_t>(c)];
  j["proportions"] = std::move(props);
  j["dominant"] = label_name(d.dominant);
  return j;
}

}  // namespace

std::string channel_report_json(const LeaningDistribution& dist,
                                const YearlyTrend& trend,
                                const ChannelVerdict* verdict) {
  json j = dist_to_json(dist);
  if (verdict) {
    j["verdict"] = verdict_name(verdict->verdict);
    j["ground_truth"] = coarse_name(verdict->truth);
    j["predicted_coarse"] = coarse_name(verdict->predicted_coarse);
  }
  json years = json::array();
  for (const auto& b : trend.buckets) {
    json y = dist_to_json(b.dist);
    y["year"] = b.year;
    y["low_support"] = b.low_support;
    y.erase("channel");
    years.push_back(std::move(y));
  }
  j["years"] = std::move(years);
  j["undated"] = trend.undated;
  return j.dump(2) + "\n";
}

void render_channel_svg(const LeaningDistribution& dist,
                        const YearlyTrend& trend, const std::string& path) {
  static const char* kFills[6] = {"#67001f", "#d6604d", "#bdbdbd",
                                  "#9970ab", "#4393c3", "#053061"};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ChannelError("cannot write SVG: " + path);
  constexpr int kBarW = 48, kBarH = 220, kGap = 30, kTop = 40, kLeft = 40;
  long bars = 1 + static_cast<long>(trend.buckets.size());
  long wpx = kLeft + bars * (kBarW + kGap) + 140, hpx = kTop + kBarH + 60;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << wpx
      << "\" height=\"" << hpx << "\">\n";
  out << "<text x=\"8\" y=\"20\" font-size=\"13\">" << dist.channel
      << " (n=" << dist.n << ")</text>\n";
  auto bar = [&](long i, const LeaningDistribution& d, const std::string& lab) {
    long x = kLeft + i * (kBarW + kGap);
    double y = kTop;
    for (int c = 0; c < 6; ++c) {
      double h = d.proportions[static_cast<std::size_t>(c)] * kBarH;
      if (h <= 0) continue;
      out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << kBarW
          << "\" height=\"" << h << "\" fill=\""
          << kFills[c] << "\" stroke=\"#333\"/>\n";
      y += h;
    }
    out << "<text x=\"" << x << "\" y=\"" << (kTop + kBarH + 16)
        << "\" font-size=\"10\">" << lab << "</text>\n";
  };
  bar(0, dist, "all");
  long i = 1;
  for (const auto& b : trend.buckets)
    bar(i++, b.dist, std::to_string(b.year) + (b.low_support ? "*" : ""));
  for (int c = 0; c < 6; ++c) {
    long x = kLeft + bars * (kBarW + kGap) + 10;
    long y = kTop + c * 18;
    out << "<rect x=\"" << x << "\" y=\"" << y
        << "\" width=\"12\" height=\"12\" fill=\"" << kFills[c] << "\"/>\n";
    out << "<text x=\"" << (x + 18) << "\" y=\"" << (y + 11)
        << "\" font-size=\"10\">" << kLabelNames[static_cast<std::size_t>(c)]
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace ytlc
