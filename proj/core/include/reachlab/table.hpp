#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace reachlab {

/// One tidy measurement: (task, estimator, sample count, statistic) -> value [ci].
struct MetricRow {
  std::string task;
  std::string kind;  // "MC", "SCOPE", "REACH", or "-" for estimator-free rows
  std::size_t n = 0;
  std::string statistic;
  double value = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> ci_low;
  std::optional<double> ci_high;
  std::uint64_t seed = 0;
};

class ExperimentTable {
 public:
  static constexpr std::string_view kCsvHeader = "task,kind,n,statistic,value,ci_low,ci_high,seed";

  void add(MetricRow row) { rows_.push_back(std::move(row)); }
  void append(const ExperimentTable& other);

  const std::vector<MetricRow>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }

  /// Rows whose statistic (and optionally task prefix / kind) match.
  std::vector<MetricRow> select(std::string_view statistic, std::string_view task_prefix = {},
                                std::string_view kind = {}) const;

  /// Fixed column order; doubles in shortest round-trip form, absent CIs empty.
  std::string to_csv() const;
  std::string to_json() const;

  /// Parses the output of to_csv(). Throws InvalidArgument on malformed input.
  static ExperimentTable from_csv(std::string_view text);

 private:
  std::vector<MetricRow> rows_;
};

/// Shortest text that reads back to the same double ("nan" and "inf" spelled out).
std::string format_double(double x);

}  // namespace reachlab
