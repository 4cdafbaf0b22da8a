#include "reachlab/table.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "reachlab/errors.hpp"

namespace reachlab {

namespace {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw InvalidArgument("malformed number '" + s + "' in table");
  return v;
}

nlohmann::json json_number(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

void ExperimentTable::append(const ExperimentTable& other) {
  rows_.insert(rows_.end(), other.rows_.begin(), other.rows_.end());
}

std::vector<MetricRow> ExperimentTable::select(std::string_view statistic,
                                               std::string_view task_prefix,
                                               std::string_view kind) const {
  std::vector<MetricRow> out;
  for (const auto& r : rows_) {
    if (r.statistic != statistic) continue;
    if (!task_prefix.empty() && !r.task.starts_with(task_prefix)) continue;
    if (!kind.empty() && r.kind != kind) continue;
    out.push_back(r);
  }
  return out;
}

std::string ExperimentTable::to_csv() const {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const auto& r : rows_) {
    os << csv_field(r.task) << ',' << csv_field(r.kind) << ',' << r.n << ','
       << csv_field(r.statistic) << ',' << format_double(r.value) << ','
       << (r.ci_low ? format_double(*r.ci_low) : "") << ','
       << (r.ci_high ? format_double(*r.ci_high) : "") << ',' << r.seed << '\n';
  }
  return os.str();
}

std::string ExperimentTable::to_json() const {
  auto rows = nlohmann::json::array();
  for (const auto& r : rows_) {
    rows.push_back({{"task", r.task},
                    {"kind", r.kind},
                    {"n", r.n},
                    {"statistic", r.statistic},
                    {"value", json_number(r.value)},
                    {"ci_low", r.ci_low ? json_number(*r.ci_low) : nlohmann::json(nullptr)},
                    {"ci_high", r.ci_high ? json_number(*r.ci_high) : nlohmann::json(nullptr)},
                    {"seed", r.seed}});
  }
  return nlohmann::json{{"columns", {"task", "kind", "n", "statistic", "value", "ci_low",
                                     "ci_high", "seed"}},
                        {"rows", rows}}
      .dump(2);
}

ExperimentTable ExperimentTable::from_csv(std::string_view text) {
  ExperimentTable table;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader)
    throw InvalidArgument("table CSV header does not match the fixed column order");
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 8)
      throw InvalidArgument("table CSV line " + std::to_string(line_no) + " has " +
                            std::to_string(f.size()) + " fields, expected 8");
    MetricRow r;
    r.task = f[0];
    r.kind = f[1];
    r.n = static_cast<std::size_t>(parse_double(f[2]));
    r.statistic = f[3];
    r.value = parse_double(f[4]);
    if (!f[5].empty()) r.ci_low = parse_double(f[5]);
    if (!f[6].empty()) r.ci_high = parse_double(f[6]);
    r.seed = std::stoull(f[7]);
    table.add(std::move(r));
  }
  return table;
}

}  // namespace reachlab
