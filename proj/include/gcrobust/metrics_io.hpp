#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gcrobust/errors.hpp"
#include "gcrobust/train.hpp"

namespace gcr {

/// Parsed metrics.csv. Rows that do not parse are dropped and reported in
/// `warnings`.
struct MetricsTable {
  std::vector<EpochRecord> rows;
  std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

inline bool parse_number(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(out);
}

}  // namespace detail

inline MetricsTable parse_metrics(std::istream& in, const std::string& source = "metrics.csv") {
  MetricsTable table;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line_no == 1 && line != kMetricsSchema) {
        table.warnings.push_back(source + ": unrecognized schema line '" + line + "'");
      }
      continue;
    }
    if (!header_seen) {
      if (line != kMetricsHeader) throw DataError(source + ": unexpected header '" + line + "'");
      header_seen = true;
      continue;
    }
    const auto fields = detail::split_csv(line);
    double v[9];
    bool ok = fields.size() == 9;
    for (std::size_t i = 0; ok && i < 9; ++i) ok = detail::parse_number(fields[i], v[i]);
    if (!ok) {
      table.warnings.push_back(source + ":" + std::to_string(line_no) + ": skipped malformed row");
      continue;
    }
    EpochRecord r;
    r.epoch = static_cast<int>(v[0]);
    r.train_loss = v[1];
    r.train_acc = v[2];
    r.test_acc = v[3];
    r.clean_train_acc = v[4];
    r.noisy_acc_vs_assigned = v[5];
    r.noisy_acc_vs_true = v[6];
    r.dirichlet_energy = v[7];
    r.wallclock_ms = static_cast<long long>(v[8]);
    table.rows.push_back(r);
  }
  if (!header_seen) throw DataError(source + ": missing header");
  return table;
}

inline MetricsTable read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return parse_metrics(in, path.string());
}

}  // namespace gcr
