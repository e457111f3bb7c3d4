#include "collapse_lab/results.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <tuple>

#include "collapse_lab/error.hpp"
#include "text.hpp"

namespace collapse_lab {

namespace {

void append_field(std::string& out, std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) {
    out += field;
    return;
  }
  out += '"';
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
}

std::vector<std::string> split_record(std::string_view line, std::size_t line_no) {
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
  if (quoted) throw Error(ErrorCode::kIo, "line " + std::to_string(line_no) + ": unterminated quoted field");
  return fields;
}

template <class T>
T parse_number(const std::string& field, std::size_t line_no, const char* column) {
  T value{};
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    // from_chars rejects "inf"/"nan" spellings that printf produces.
    if constexpr (std::is_floating_point_v<T>) {
      if (field == "inf") return INFINITY;
      if (field == "-inf") return -INFINITY;
    }
    throw Error(ErrorCode::kIo, "line " + std::to_string(line_no) + ": bad " + column + " value '" + field + "'");
  }
  return value;
}

auto sort_key(const ResultRow& r) {
  return std::tie(r.scenario, r.family, r.estimator, r.schedule, r.n0, r.t, r.metric);
}

}  // namespace

void sort_rows(std::vector<ResultRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ResultRow& a, const ResultRow& b) { return sort_key(a) < sort_key(b); });
}

std::string format_csv(std::vector<ResultRow> rows) {
  sort_rows(rows);
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : rows) {
    if (std::isnan(r.value)) continue;
    if (!(r.ci_low <= r.value && r.value <= r.ci_high)) {
      throw Error(ErrorCode::kConfiguration, "row " + r.metric + " at t = " + std::to_string(r.t) +
                                                 " violates ci_low <= value <= ci_high");
    }
    for (std::string_view field : {std::string_view(r.scenario), std::string_view(r.family),
                                   std::string_view(r.estimator), std::string_view(r.schedule)}) {
      append_field(out, field);
      out += ',';
    }
    out += std::to_string(r.n0) + ',' + std::to_string(r.T) + ',' + std::to_string(r.R) + ',' + std::to_string(r.t) +
           ',';
    append_field(out, r.metric);
    out += ',' + detail::exact(r.value) + ',' + detail::exact(r.ci_low) + ',' + detail::exact(r.ci_high) + ',' +
           std::to_string(r.exclusions) + ',' + std::to_string(r.seed) + '\n';
  }
  return out;
}

std::vector<ResultRow> parse_csv(std::string_view text) {
  std::vector<ResultRow> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!header_seen) {
      if (line != kCsvHeader) throw Error(ErrorCode::kIo, "line 1: unexpected CSV header");
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_record(line, line_no);
    if (f.size() != 14) {
      throw Error(ErrorCode::kIo,
                  "line " + std::to_string(line_no) + ": expected 14 fields, got " + std::to_string(f.size()));
    }
    ResultRow r;
    r.scenario = f[0];
    r.family = f[1];
    r.estimator = f[2];
    r.schedule = f[3];
    r.n0 = parse_number<std::uint64_t>(f[4], line_no, "n0");
    r.T = parse_number<std::uint64_t>(f[5], line_no, "T");
    r.R = parse_number<std::uint64_t>(f[6], line_no, "R");
    r.t = parse_number<std::uint64_t>(f[7], line_no, "t");
    r.metric = f[8];
    r.value = parse_number<double>(f[9], line_no, "value");
    r.ci_low = parse_number<double>(f[10], line_no, "ci_low");
    r.ci_high = parse_number<double>(f[11], line_no, "ci_high");
    r.exclusions = parse_number<std::uint64_t>(f[12], line_no, "exclusions");
    r.seed = parse_number<std::uint64_t>(f[13], line_no, "seed");
    rows.push_back(std::move(r));
  }
  if (!header_seen) throw Error(ErrorCode::kIo, "empty CSV document");
  return rows;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

void export_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path) {
  write_text_file(path, format_csv(rows));
}

std::vector<ResultRow> summary_rows(const ReplicationSummary& summary, std::string_view scenario) {
  const ChainConfig& c = summary.config;
  std::vector<ResultRow> rows;
  for (const auto& s : summary.series) {
    for (std::size_t i = 0; i < s.value.size(); ++i) {
      if (!std::isfinite(s.value[i])) continue;
      rows.push_back(ResultRow{std::string(scenario), c.family.label(), c.estimator.label(), c.schedule.label(), c.n0,
                               c.T, summary.replications, i + 1, s.name, s.value[i], s.ci_low[i], s.ci_high[i],
                               s.exclusions[i], c.seed});
    }
  }
  return rows;
}

std::string format_trajectories(const ReplicationSummary& summary, std::string_view scenario, bool include_header) {
  const ChainConfig& c = summary.config;
  const std::string labels[] = {std::string(scenario), c.family.label(), c.estimator.label(), c.schedule.label()};
  std::string prefix;
  for (const auto& field : labels) {
    append_field(prefix, field);
    prefix += ',';
  }
  prefix += std::to_string(c.n0) + ',';

  std::string out;
  if (include_header) {
    out += kTrajectoryHeader;
    out += '\n';
  }
  for (std::size_t rep = 0; rep < summary.trajectories.size(); ++rep) {
    const auto& estimates = summary.trajectories[rep].estimates;
    for (std::size_t t = 0; t < estimates.size(); ++t) {
      for (std::size_t j = 0; j < estimates[t].dim(); ++j) {
        out += prefix + std::to_string(rep) + ',' + std::to_string(t + 1) + ',' + std::to_string(j) + ',' +
               detail::exact(estimates[t][j]) + '\n';
      }
    }
  }
  return out;
}

}  // namespace collapse_lab
