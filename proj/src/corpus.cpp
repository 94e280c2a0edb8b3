#include "ytlc/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "ytlc/rng.hpp"
#include "ytlc/unicode.hpp"

namespace ytlc {

const char* label_name(LeaningLabel l) {
  return kLabelNames[static_cast<std::size_t>(l)];
}

std::optional<LeaningLabel> parse_label(std::string_view s) {
  for (int i = 0; i < kNumClasses; ++i)
    if (s == kLabelNames[static_cast<std::size_t>(i)])
      return static_cast<LeaningLabel>(i);
  return std::nullopt;
}

std::optional<Date> parse_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  auto digits = [](std::string_view v, int& out) {
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    return ec == std::errc() && p == v.data() + v.size();
  };
  Date d;
  if (!digits(s.substr(0, 4), d.year) || !digits(s.substr(5, 2), d.month) ||
      !digits(s.substr(8, 2), d.day))
    return std::nullopt;
  if (d.month < 1 || d.month > 12 || d.day < 1) return std::nullopt;
  static constexpr int days_in[12] = {31, 28, 31, 30, 31, 30,
                                      31, 31, 30, 31, 30, 31};
  int limit = days_in[d.month - 1];
  bool leap = d.year % 4 == 0 && (d.year % 100 != 0 || d.year % 400 == 0);
  if (d.month == 2 && leap) limit = 29;
  if (d.day > limit) return std::nullopt;
  return d;
}

std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
  return buf;
}

namespace {

TitleRecord record_from_fields(const std::string& video_id,
                               const std::string& channel_id,
                               const std::string& title,
                               const std::string& upload_date,
                               const std::string& label, long line) {
  TitleRecord r;
  r.video_id = video_id;
  r.channel_id = channel_id;
  r.title = title;
  if (!upload_date.empty()) {
    r.upload_date = parse_date(upload_date);
    if (!r.upload_date) {
      std::cerr << "warning: line " << line << ": unparseable date '"
                << upload_date << "' ignored\n";
    }
  }
  if (!label.empty()) {
    auto l = parse_label(label);
    if (!l)
      throw CorpusError("line " + std::to_string(line) +
                            ": unknown label '" + label + "'",
                        line);
    r.label = l;
  }
  return r;
}

std::vector<TitleRecord> ingest_jsonl(std::istream& in) {
  std::vector<TitleRecord> out;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw CorpusError(
          "line " + std::to_string(lineno) + ": malformed JSON: " + e.what(),
          lineno);
    }
    if (!j.is_object() || !j.contains("video_id") ||
        !j.contains("channel_id") || !j.contains("title"))
      throw CorpusError("line " + std::to_string(lineno) +
                            ": missing required field",
                        lineno);
    out.push_back(record_from_fields(
        j.at("video_id").get<std::string>(),
        j.at("channel_id").get<std::string>(),
        j.at("title").is_null() ? "" : j.at("title").get<std::string>(),
        j.value("upload_date", ""), j.value("label", ""), lineno));
  }
  return out;
}

// RFC-4180: quoted fields may contain commas, quotes ("" escape), newlines.
// Returns one row of fields; `lineno` tracks physical lines consumed.
bool read_csv_row(std::istream& in, std::vector<std::string>& fields,
                  long& lineno) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  int c;
  while ((c = in.get()) != EOF) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++lineno;
        field.push_back(static_cast<char>(c));
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\r') {
      // swallow; CRLF handled at '\n'
    } else if (c == '\n') {
      ++lineno;
      fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(static_cast<char>(c));
    }
  }
  if (in_quotes) throw CorpusError("unterminated quoted CSV field", lineno);
  if (any) {
    ++lineno;
    fields.push_back(std::move(field));
    return true;
  }
  return false;
}

std::vector<TitleRecord> ingest_csv(std::istream& in) {
  std::vector<TitleRecord> out;
  std::vector<std::string> fields;
  long lineno = 0;
  if (!read_csv_row(in, fields, lineno))
    throw CorpusError("empty CSV file", 0);
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < fields.size(); ++i) col[fields[i]] = i;
  for (const char* required : {"video_id", "channel_id", "title"})
    if (!col.count(required))
      throw CorpusError(std::string("CSV header missing column '") + required +
                            "'",
                        1);
  auto get = [&](const std::vector<std::string>& row, const char* name) {
    auto it = col.find(name);
    if (it == col.end() || it->second >= row.size()) return std::string();
    return row[it->second];
  };
  while (read_csv_row(in, fields, lineno)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() < 3)
      throw CorpusError("line " + std::to_string(lineno) + ": too few fields",
                        lineno);
    out.push_back(record_from_fields(get(fields, "video_id"),
                                     get(fields, "channel_id"),
                                     get(fields, "title"),
                                     get(fields, "upload_date"),
                                     get(fields, "label"), lineno));
  }
  return out;
}

}  // namespace

std::vector<TitleRecord> ingest(const std::string& path, FileFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot open file: " + path);
  return format == FileFormat::Jsonl ? ingest_jsonl(in) : ingest_csv(in);
}

void write_jsonl(const std::string& path,
                 const std::vector<TitleRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CorpusError("cannot write file: " + path);
  for (const auto& r : records) {
    nlohmann::json j;
    j["video_id"] = r.video_id;
    j["channel_id"] = r.channel_id;
    j["title"] = r.title;
    if (r.upload_date) j["upload_date"] = format_date(*r.upload_date);
    if (r.label) j["label"] = label_name(*r.label);
    out << j.dump() << '\n';
  }
}

std::pair<std::vector<TitleRecord>, CorpusStats> clean(
    std::vector<TitleRecord> records) {
  CorpusStats stats;
  std::vector<TitleRecord> kept;
  kept.reserve(records.size());
  std::unordered_set<std::string> seen;  // channel_id '\x1f' normalized title
  seen.reserve(records.size() * 2);
  for (auto& r : records) {
    std::string title = uni::clean_title(r.title);
    if (title.empty()) {
      ++stats.dropped_count;
      continue;
    }
    std::string key = r.channel_id;
    key.push_back('\x1f');
    key += title;
    if (!seen.insert(std::move(key)).second) {
      ++stats.duplicate_count;
      continue;
    }
    r.title = std::move(title);
    if (r.label)
      ++stats.per_class_counts[static_cast<std::size_t>(*r.label)];
    else
      ++stats.unlabeled;
    kept.push_back(std::move(r));
  }
  stats.total = static_cast<long>(kept.size());
  return {std::move(kept), stats};
}

std::array<long, 3> apportion(long n, const std::array<double, 3>& ratios) {
  std::array<long, 3> q{};
  std::array<double, 3> rem{};
  long assigned = 0;
  for (int i = 0; i < 3; ++i) {
    double exact = static_cast<double>(n) * ratios[i];
    q[i] = static_cast<long>(exact);
    rem[i] = exact - static_cast<double>(q[i]);
    assigned += q[i];
  }
  long leftover = n - assigned;
  // Distribute by largest fractional remainder, ties to the lower index.
  std::array<int, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return rem[a] > rem[b]; });
  for (long k = 0; k < leftover; ++k) ++q[order[static_cast<std::size_t>(k % 3)]];
  return q;
}

std::array<long, 6> class_counts(const std::vector<TitleRecord>& records) {
  std::array<long, 6> counts{};
  for (const auto& r : records) {
    if (!r.label)
      throw CorpusError("unlabeled record encountered: video_id=" +
                        r.video_id);
    ++counts[static_cast<std::size_t>(*r.label)];
  }
  return counts;
}

DatasetSplit stratified_split(const std::vector<TitleRecord>& records,
                              std::array<double, 3> ratios,
                              std::uint64_t seed) {
  double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9)
    throw CorpusError("split ratios must sum to 1");
  for (double r : ratios)
    if (r < 0) throw CorpusError("split ratios must be non-negative");

  std::array<std::vector<std::size_t>, 6> by_class;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].label)
      throw CorpusError("stratified_split requires labelled records");
    by_class[static_cast<std::size_t>(*records[i].label)].push_back(i);
  }

  DatasetSplit split;
  split.seed = seed;
  split.ratios = ratios;
  for (int c = 0; c < kNumClasses; ++c) {
    auto& idx = by_class[static_cast<std::size_t>(c)];
    long n = static_cast<long>(idx.size());
    if (n == 0) continue;
    Rng rng(Rng::derive(seed, std::string("split/") + kLabelNames[c]));
    for (long i = n - 1; i > 0; --i) {
      std::size_t j = rng.below(static_cast<std::uint64_t>(i + 1));
      std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
    }
    auto quota = apportion(n, ratios);
    if (n < 3 && (quota[0] == 0 || quota[1] == 0 || quota[2] == 0) &&
        ratios[0] > 0 && ratios[1] > 0 && ratios[2] > 0) {
      std::cerr << "warning: class " << kLabelNames[c] << " has only " << n
                << " records; it may be absent from some splits\n";
    }
    long pos = 0;
    for (int s = 0; s < 3; ++s) {
      auto* dst = s == 0 ? &split.train
                 : s == 1 ? &split.validation
                          : &split.test;
      for (long k = 0; k < quota[static_cast<std::size_t>(s)]; ++k, ++pos)
        dst->push_back(records[idx[static_cast<std::size_t>(pos)]]);
    }
  }
  return split;
}

}  // namespace ytlc
