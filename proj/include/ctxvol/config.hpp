#pragma once

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cooccurrence.hpp"
#include "corpus.hpp"
#include "date.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "preprocess.hpp"
#include "volatility.hpp"

namespace ctxvol {

/// Everything one pipeline run needs. Serializes to and from a plain
/// `key = value` file; see README for the key list.
struct PipelineConfig {
  std::filesystem::path input;
  IngestOptions ingest;
  Granularity granularity;
  std::optional<Date> date_start;
  std::optional<Date> date_end;
  std::filesystem::path topic_table;
  std::string topic;
  double min_topic_share = 0.3;

  bool lowercase = true;
  std::filesystem::path stopwords;
  std::filesystem::path blocklist;
  std::filesystem::path lemma_map;
  PruningConfig pruning; // term sets are loaded from the paths above

  Window window;
  MatrixOptions matrix;
  VolatilityConfig volatility;

  std::filesystem::path output = "ctxvol-out";
  std::filesystem::path cache_dir; // empty: <output>/.cache
  bool cache = true;
  unsigned workers = default_workers();
  std::vector<std::string> terms;
  std::size_t report_top_k = 0; // 0: every term

  std::filesystem::path effective_cache_dir() const { return cache_dir.empty() ? output / ".cache" : cache_dir; }

  void set(std::string_view key, std::string_view value);
  std::vector<std::pair<std::string, std::string>> entries() const;
  void validate() const;
};

namespace detail {

inline std::string_view trim_ws(std::string_view s) {
  const char *ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  return s.substr(b, s.find_last_not_of(ws) - b + 1);
}

template <class T> T parse_number(std::string_view key, std::string_view v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size())
    throw ConfigError("'" + std::string(key) + "': not a number: '" + std::string(v) + "'");
  return out;
}

inline bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "off" || v == "no" || v == "0") return false;
  throw ConfigError("'" + std::string(key) + "': expected true/false, got '" + std::string(v) + "'");
}

inline Date parse_config_date(std::string_view key, std::string_view v) {
  auto d = parse_date(v);
  if (!d) throw ConfigError("'" + std::string(key) + "': invalid date '" + std::string(v) + "'");
  return *d;
}

inline std::vector<std::string> split_list(std::string_view v) {
  std::vector<std::string> out;
  while (!v.empty()) {
    auto comma = v.find(',');
    auto item = trim_ws(v.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

inline std::string join_list(const std::vector<std::string> &items) {
  std::string out;
  for (const auto &s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

} // namespace detail

inline void PipelineConfig::set(std::string_view key, std::string_view raw) {
  using namespace detail;
  auto v = trim_ws(raw);
  const std::string val(v);
  if (key == "input") input = val;
  else if (key == "format") ingest.format = parse_format(v);
  else if (key == "id_field") ingest.id_field = val;
  else if (key == "date_field") ingest.date_field = val;
  else if (key == "text_field") ingest.text_field = val;
  else if (key == "granularity") granularity = parse_granularity(v);
  else if (key == "date_start") date_start = v.empty() ? std::nullopt : std::optional(parse_config_date(key, v));
  else if (key == "date_end") date_end = v.empty() ? std::nullopt : std::optional(parse_config_date(key, v));
  else if (key == "topic_table") topic_table = val;
  else if (key == "topic") topic = val;
  else if (key == "min_topic_share") min_topic_share = parse_number<double>(key, v);
  else if (key == "lowercase") lowercase = parse_bool(key, v);
  else if (key == "stopwords") stopwords = val;
  else if (key == "blocklist") blocklist = val;
  else if (key == "lemma_map") lemma_map = val;
  else if (key == "absolute_pruning") pruning.absolute = parse_bool(key, v);
  else if (key == "min_doc_freq") pruning.min_doc_freq = parse_number<std::size_t>(key, v);
  else if (key == "relative_pruning") pruning.relative = parse_bool(key, v);
  else if (key == "relative_low") pruning.relative_low = parse_number<double>(key, v);
  else if (key == "relative_high") pruning.relative_high = parse_number<double>(key, v);
  else if (key == "window") {
    if (v == "sentence") window.kind = Window::Kind::sentence;
    else if (v == "tokens") window.kind = Window::Kind::tokens;
    else throw ConfigError("'window': expected sentence|tokens");
  } else if (key == "window_size") window.size = parse_number<std::size_t>(key, v);
  else if (key == "measure") matrix.measure = parse_measure(v);
  else if (key == "top_k") matrix.top_k = parse_number<std::size_t>(key, v);
  else if (key == "min_joint") matrix.min_joint = parse_number<std::uint32_t>(key, v);
  else if (key == "min_score") matrix.min_score = v.empty() ? std::nullopt : std::optional(parse_number<double>(key, v));
  else if (key == "history") volatility.history = parse_number<std::size_t>(key, v);
  else if (key == "dispersion") volatility.dispersion = parse_dispersion(v);
  else if (key == "absent_policy") volatility.absent = parse_absent_policy(v);
  else if (key == "output") output = val;
  else if (key == "cache_dir") cache_dir = val;
  else if (key == "cache") cache = parse_bool(key, v);
  else if (key == "workers") workers = parse_number<unsigned>(key, v);
  else if (key == "terms") terms = split_list(v);
  else if (key == "report_top_k") report_top_k = parse_number<std::size_t>(key, v);
  else throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

/// Key/value echo in a fixed order; parsing it back reproduces the config.
inline std::vector<std::pair<std::string, std::string>> PipelineConfig::entries() const {
  auto opt_date = [](const std::optional<Date> &d) { return d ? d->iso() : std::string(); };
  auto flag = [](bool b) { return std::string(b ? "true" : "false"); };
  return {
      {"input", input.string()},
      {"format", ingest.format == IngestOptions::Format::jsonl ? "jsonl" : "csv"},
      {"id_field", ingest.id_field},
      {"date_field", ingest.date_field},
      {"text_field", ingest.text_field},
      {"granularity", to_string(granularity)},
      {"date_start", opt_date(date_start)},
      {"date_end", opt_date(date_end)},
      {"topic_table", topic_table.string()},
      {"topic", topic},
      {"min_topic_share", format_number(min_topic_share)},
      {"lowercase", flag(lowercase)},
      {"stopwords", stopwords.string()},
      {"blocklist", blocklist.string()},
      {"lemma_map", lemma_map.string()},
      {"absolute_pruning", flag(pruning.absolute)},
      {"min_doc_freq", std::to_string(pruning.min_doc_freq)},
      {"relative_pruning", flag(pruning.relative)},
      {"relative_low", format_number(pruning.relative_low)},
      {"relative_high", format_number(pruning.relative_high)},
      {"window", window.kind == Window::Kind::sentence ? "sentence" : "tokens"},
      {"window_size", std::to_string(window.size)},
      {"measure", to_string(matrix.measure)},
      {"top_k", std::to_string(matrix.top_k)},
      {"min_joint", std::to_string(matrix.min_joint)},
      {"min_score", matrix.min_score ? format_number(*matrix.min_score) : std::string()},
      {"history", std::to_string(volatility.history)},
      {"dispersion", to_string(volatility.dispersion)},
      {"absent_policy", to_string(volatility.absent)},
      {"output", output.string()},
      {"cache_dir", cache_dir.string()},
      {"cache", flag(cache)},
      {"workers", std::to_string(workers)},
      {"terms", detail::join_list(terms)},
      {"report_top_k", std::to_string(report_top_k)},
  };
}

/// Static checks: referenced files exist and numeric options are in range.
/// Checks that need the corpus (h <= T) happen once it is sliced.
inline void PipelineConfig::validate() const {
  namespace fs = std::filesystem;
  if (input.empty()) throw ConfigError("'input' is required");
  auto must_exist = [](std::string_view key, const fs::path &p) {
    if (!p.empty() && !fs::is_regular_file(p))
      throw ConfigError("'" + std::string(key) + "': file not found: " + p.string());
  };
  must_exist("input", input);
  must_exist("stopwords", stopwords);
  must_exist("blocklist", blocklist);
  must_exist("lemma_map", lemma_map);
  must_exist("topic_table", topic_table);
  if (!topic_table.empty() && topic.empty()) throw ConfigError("'topic_table' given without 'topic'");
  if (topic_table.empty() && !topic.empty()) throw ConfigError("'topic' given without 'topic_table'");
  if (!(min_topic_share > 0.0 && min_topic_share <= 1.0)) throw ConfigError("'min_topic_share' must be in (0, 1]");
  if (date_start && date_end && *date_end < *date_start) throw ConfigError("'date_start' is after 'date_end'");
  pruning.validate();
  if (window.kind == Window::Kind::tokens && window.size < 1) throw ConfigError("'window_size' must be >= 1");
  if (matrix.top_k < 1) throw ConfigError("'top_k' must be >= 1");
  if (matrix.min_joint < 1) throw ConfigError("'min_joint' must be >= 1");
  if (volatility.history < 1) throw ConfigError("'history' must be >= 1");
  if (workers < 1) throw ConfigError("'workers' must be >= 1");
}

/// Reads `key = value` lines; '#' starts a comment line.
inline void load_config_file(PipelineConfig &config, const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto t = detail::trim_ws(line);
    if (t.empty() || t.front() == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    try {
      config.set(detail::trim_ws(t.substr(0, eq)), t.substr(eq + 1));
    } catch (const ConfigError &e) {
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  // relative paths in the file are relative to the file itself
  auto base = path.parent_path();
  for (auto *p : {&config.input, &config.stopwords, &config.blocklist, &config.lemma_map, &config.topic_table})
    if (!p->empty() && p->is_relative()) *p = base / *p;
}

inline void write_config_file(const PipelineConfig &config, std::ostream &out) {
  for (const auto &[k, v] : config.entries()) out << k << " = " << v << '\n';
}

/// Name of the environment variable that overrides the output directory.
inline constexpr const char *output_env_var = "CTXVOL_OUTPUT";

inline void apply_environment(PipelineConfig &config) {
  if (const char *v = std::getenv(output_env_var); v && *v) config.output = v;
}

} // namespace ctxvol
