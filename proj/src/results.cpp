#include "riss/harness.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#ifndef RISS_VERSION
#define RISS_VERSION "0.0.0"
#endif

namespace riss::harness {

std::string_view version() { return RISS_VERSION; }

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::mt19937_64 trial_rng(std::uint64_t seed, std::string_view experiment, int trial) {
  const std::uint64_t h = fnv1a(experiment);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                    static_cast<std::uint32_t>(trial)};
  return std::mt19937_64(seq);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, ptr);
}

bool operator==(const ResultRow& a, const ResultRow& b) {
  // Values compare through their serialized text, so NaN rows still match.
  return std::tie(a.experiment, a.seed, a.param, a.param_value, a.metric, a.trial) ==
             std::tie(b.experiment, b.seed, b.param, b.param_value, b.metric, b.trial) &&
         format_double(a.value) == format_double(b.value);
}

namespace {

void check_field(const std::string& s, const char* name) {
  if (s.find_first_of(",\n\r\"") != std::string::npos)
    throw std::invalid_argument(std::string("CSV field '") + name + "' contains a separator: " + s);
}

}  // namespace

std::string to_csv(std::vector<ResultRow> rows) {
  std::vector<std::pair<std::vector<std::string>, std::string>> lines;
  lines.reserve(rows.size());
  for (const auto& r : rows) {
    check_field(r.experiment, "experiment");
    check_field(r.param, "param");
    check_field(r.param_value, "param_value");
    check_field(r.metric, "metric");
    check_field(r.trial, "trial");
    std::vector<std::string> cells{r.experiment, std::to_string(r.seed), r.param, r.param_value,
                                   r.metric, format_double(r.value), r.trial};
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) line += (i ? "," : "") + cells[i];
    lines.emplace_back(std::move(cells), std::move(line));
  }
  std::sort(lines.begin(), lines.end());
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& [cells, line] : lines) {
    out += line;
    out += '\n';
  }
  return out;
}

std::vector<ResultRow> parse_csv(std::string_view text) {
  std::vector<ResultRow> rows;
  std::size_t pos = 0;
  bool header = true;
  int line_no = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (header) {
      if (line != kCsvHeader) throw std::invalid_argument("CSV header mismatch");
      header = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string_view> cells;
    std::size_t s = 0;
    while (true) {
      const auto c = line.find(',', s);
      cells.push_back(line.substr(s, c - s));
      if (c == std::string_view::npos) break;
      s = c + 1;
    }
    if (cells.size() != 7)
      throw std::invalid_argument("CSV line " + std::to_string(line_no) + ": expected 7 fields");
    ResultRow r;
    r.experiment = cells[0];
    auto [p1, e1] = std::from_chars(cells[1].data(), cells[1].data() + cells[1].size(), r.seed);
    r.param = cells[2];
    r.param_value = cells[3];
    r.metric = cells[4];
    auto [p2, e2] = std::from_chars(cells[5].data(), cells[5].data() + cells[5].size(), r.value);
    if (e1 != std::errc() || e2 != std::errc())
      throw std::invalid_argument("CSV line " + std::to_string(line_no) + ": bad number");
    r.trial = cells[6];
    rows.push_back(std::move(r));
  }
  if (header) throw std::invalid_argument("CSV is missing its header");
  return rows;
}

void emit_csv(const std::vector<ResultRow>& rows, const std::filesystem::path& path) {
  const std::string text = to_csv(rows);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_manifest(const std::filesystem::path& dir, std::string_view experiment,
                    const ScenarioConfig& config) {
  const auto path = dir / "manifest";
  std::map<std::string, std::string> entries;
  if (std::ifstream in(path); in) {
    std::string line;
    while (std::getline(in, line)) {
      const auto eq = line.find('=');
      if (eq != std::string::npos) entries[line.substr(0, eq)] = line.substr(eq + 1);
    }
  }
  std::ostringstream hash;
  hash << std::hex << fnv1a(canonical_dump(config));
  const std::string prefix(experiment);
  entries[prefix + ".config_hash"] = hash.str();
  entries[prefix + ".seed"] = std::to_string(config.seed);
  entries["version"] = std::string(version());

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (const auto& [k, v] : entries) out << k << '=' << v << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace riss::harness
