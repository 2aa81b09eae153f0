#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lifshits/config.hpp"

namespace lifshits {

/// ISO-8601 UTC time from SOURCE_DATE_EPOCH, or the epoch when unset, so that
/// reruns produce identical files.
std::string record_timestamp();

/// {timestamp, config_hash, seed, kind, payload}.
Json make_record(const std::string& kind, const std::string& config_hash, std::uint64_t seed, Json payload);

/// Shortest round-trip decimal form used in CSV cells.
std::string csv_number(double x);

/// Collects records and a CSV summary for one run.
class ResultSink {
 public:
  explicit ResultSink(const ExperimentConfig& cfg);

  void add(const std::string& kind, Json payload);
  void set_header(std::vector<std::string> header) { header_ = std::move(header); }
  void add_row(std::vector<std::string> row);

  const std::vector<Json>& records() const noexcept { return records_; }
  const std::vector<std::string>& header() const noexcept { return header_; }
  const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }
  const std::string& hash() const noexcept { return hash_; }

  /// Writes results.jsonl, summary.csv and config.lock into dir.
  void write(const std::filesystem::path& dir) const;

 private:
  ExperimentConfig cfg_;
  std::string hash_;
  std::vector<Json> records_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::vector<Json> read_records(const std::filesystem::path& file);
void write_csv(const std::filesystem::path& file, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

}  // namespace lifshits
