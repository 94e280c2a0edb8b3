#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ytlc {

/// The six ordered categories. Ordinal indices 0..5 are fixed and shared by
/// loss targets, confusion-matrix axes, and report rows.
enum class LeaningLabel : int {
  FarLeft = 0,
  Left = 1,
  Center = 2,
  AntiWoke = 3,
  Right = 4,
  FarRight = 5,
};

inline constexpr int kNumClasses = 6;

inline constexpr std::array<const char*, 6> kLabelNames = {
    "FAR_LEFT", "LEFT", "CENTER", "ANTI_WOKE", "RIGHT", "FAR_RIGHT"};

const char* label_name(LeaningLabel l);
std::optional<LeaningLabel> parse_label(std::string_view s);

struct Date {
  int year = 0;
  int month = 0;
  int day = 0;
  auto operator<=>(const Date&) const = default;
};

/// Parses strict ISO-8601 "YYYY-MM-DD"; nullopt on anything else.
std::optional<Date> parse_date(std::string_view s);
std::string format_date(const Date& d);

struct TitleRecord {
  std::string video_id;
  std::string channel_id;
  std::string title;
  std::optional<Date> upload_date;
  std::optional<LeaningLabel> label;
};

struct CorpusStats {
  long total = 0;  // records surviving cleaning
  std::array<long, 6> per_class_counts{};
  long unlabeled = 0;
  long duplicate_count = 0;
  long dropped_count = 0;
};

struct DatasetSplit {
  std::vector<TitleRecord> train;
  std::vector<TitleRecord> validation;
  std::vector<TitleRecord> test;
  std::uint64_t seed = 0;
  std::array<double, 3> ratios{};
};

class CorpusError : public std::runtime_error {
 public:
  CorpusError(std::string msg, long line = 0)
      : std::runtime_error(std::move(msg)), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

enum class FileFormat { Jsonl, Csv };

/// One TitleRecord per well-formed row, order preserved. Malformed rows and
/// unknown label strings throw CorpusError carrying the line number. Rows
/// whose title is empty after cleaning are silently skipped here; clean()
/// accounts for drops when given raw records.
std::vector<TitleRecord> ingest(const std::string& path, FileFormat format);

/// Writes records back out as JSONL (the prepare command's output format).
void write_jsonl(const std::string& path,
                 const std::vector<TitleRecord>& records);

/// NFC-normalizes and whitespace-collapses titles, drops records with empty
/// titles, and removes exact duplicate titles within the same channel
/// (first occurrence wins, case-preserving comparison).
std::pair<std::vector<TitleRecord>, CorpusStats> clean(
    std::vector<TitleRecord> records);

/// Per-class seeded shuffle + largest-remainder apportionment over the
/// ratios. Splits are disjoint and exhaustive by construction.
DatasetSplit stratified_split(const std::vector<TitleRecord>& records,
                              std::array<double, 3> ratios,
                              std::uint64_t seed);

std::array<long, 6> class_counts(const std::vector<TitleRecord>& records);

/// Largest-remainder apportionment of n into parts proportional to ratios.
std::array<long, 3> apportion(long n, const std::array<double, 3>& ratios);

}  // namespace ytlc
