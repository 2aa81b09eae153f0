#include "lifshits/records.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <stdexcept>
#include <string_view>

namespace lifshits {

std::string record_timestamp() {
  std::time_t t = 0;
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) t = static_cast<std::time_t>(std::strtoll(env, nullptr, 10));
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json make_record(const std::string& kind, const std::string& config_hash, std::uint64_t seed, Json payload) {
  return {{"timestamp", record_timestamp()},
          {"config_hash", config_hash},
          {"seed", seed},
          {"kind", kind},
          {"payload", std::move(payload)}};
}

std::string csv_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

ResultSink::ResultSink(const ExperimentConfig& cfg) : cfg_(cfg), hash_(config_hash(cfg)) {}

void ResultSink::add(const std::string& kind, Json payload) {
  static const std::array<std::string_view, 9> kinds{"ids_point", "bound", "fit",  "regime", "stat_test",
                                                     "sample",    "eigs",  "bench", "error"};
  if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) throw std::invalid_argument("unknown record kind: " + kind);
  records_.push_back(make_record(kind, hash_, cfg_.seed, std::move(payload)));
}

void ResultSink::add_row(std::vector<std::string> row) {
  if (!header_.empty() && row.size() != header_.size()) throw std::logic_error("csv row width differs from header");
  rows_.push_back(std::move(row));
}

void write_csv(const std::filesystem::path& file, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
}

void ResultSink::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "results.jsonl", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / "results.jsonl").string());
    for (const auto& r : records_) out << r.dump() << '\n';
  }
  write_csv(dir / "summary.csv", header_, rows_);
  {
    std::ofstream out(dir / "config.lock", std::ios::binary);
    Json lock = to_json(cfg_);
    lock["config_hash"] = hash_;
    out << lock.dump(2) << '\n';
  }
}

std::vector<Json> read_records(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::invalid_argument("cannot open " + file.string());
  std::vector<Json> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(Json::parse(line));
  }
  return out;
}

}  // namespace lifshits
