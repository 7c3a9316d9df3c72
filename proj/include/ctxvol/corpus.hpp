#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "csv.hpp"
#include "date.hpp"
#include "error.hpp"

namespace ctxvol {

using Sentence = std::vector<std::string>;

/// One time-stamped text. `sentences` stays empty until tokenization.
struct Document {
  std::string id;
  Date date;
  std::string text;
  std::vector<Sentence> sentences;

  friend bool operator==(const Document &, const Document &) = default;
};

/// Documents of one consecutive calendar span [start, end].
struct Slice {
  std::size_t index = 0;
  Date start;
  Date end;
  std::vector<std::size_t> docs; // positions in SlicedCorpus::documents()
};

/// Documents partitioned into consecutive, non-overlapping time slices that
/// cover [first, last] timestamp. Empty slices are kept so that slice index
/// arithmetic follows calendar time.
class SlicedCorpus {
public:
  SlicedCorpus() = default;

  const std::vector<Document> &documents() const { return docs_; }
  const std::vector<Slice> &slices() const { return slices_; }
  const Slice &slice(std::size_t t) const { return slices_.at(t); }
  std::size_t slice_count() const { return slices_.size(); }
  Granularity granularity() const { return granularity_; }
  bool empty() const { return docs_.empty(); }

  /// Slice index of document i.
  std::size_t slice_of(std::size_t doc) const { return doc_slice_.at(doc); }

  void set_sentences(std::size_t doc, std::vector<Sentence> sentences) {
    docs_.at(doc).sentences = std::move(sentences);
  }

  void mark_tokenized() { tokenized_ = true; }
  bool tokenized() const { return tokenized_ || docs_.empty(); }

private:
  friend SlicedCorpus assign_time_slices(std::vector<Document>, Granularity);

  std::vector<Document> docs_;
  std::vector<Slice> slices_;
  std::vector<std::size_t> doc_slice_;
  Granularity granularity_;
  bool tokenized_ = false;
};

/// Builds the slice partition. T counts every calendar unit between the first
/// and last timestamp inclusive. An empty input gives an empty corpus.
inline SlicedCorpus assign_time_slices(std::vector<Document> documents, Granularity granularity) {
  SlicedCorpus c;
  c.granularity_ = granularity;
  c.docs_ = std::move(documents);
  if (c.docs_.empty()) return c;

  auto [lo, hi] = std::minmax_element(c.docs_.begin(), c.docs_.end(),
                                      [](const Document &a, const Document &b) { return a.date < b.date; });
  const Date origin = unit_floor(lo->date, granularity.unit);
  const long span = granularity.span;
  const long last = units_between(origin, hi->date, granularity.unit) / span;

  c.slices_.resize(static_cast<std::size_t>(last + 1));
  for (long t = 0; t <= last; ++t) {
    auto &s = c.slices_[static_cast<std::size_t>(t)];
    s.index = static_cast<std::size_t>(t);
    s.start = add_units(origin, t * span, granularity.unit);
    s.end = add_units(origin, (t + 1) * span, granularity.unit).add_days(-1);
  }
  c.doc_slice_.resize(c.docs_.size());
  for (std::size_t i = 0; i < c.docs_.size(); ++i) {
    auto t = static_cast<std::size_t>(units_between(origin, c.docs_[i].date, granularity.unit) / span);
    c.doc_slice_[i] = t;
    c.slices_[t].docs.push_back(i);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Ingest

struct IngestOptions {
  enum class Format { jsonl, csv };
  Format format = Format::jsonl;
  std::string id_field = "id";
  std::string date_field = "date";
  std::string text_field = "text";
};

inline IngestOptions::Format parse_format(std::string_view s) {
  if (s == "jsonl" || s == "json-lines") return IngestOptions::Format::jsonl;
  if (s == "csv") return IngestOptions::Format::csv;
  throw ConfigError("unknown input format '" + std::string(s) + "' (jsonl|csv)");
}

struct Rejection {
  std::size_t line = 0;
  std::string reason;
};

struct IngestResult {
  std::vector<Document> documents;
  std::vector<Rejection> rejected;
  std::size_t accepted() const { return documents.size(); }
};

namespace detail {

inline std::optional<std::string> json_string(const nlohmann::json &obj, const std::string &key) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) return std::nullopt;
  return it->get<std::string>();
}

class IngestSink {
public:
  explicit IngestSink(IngestResult &out) : out_(out) {}

  void reject(std::size_t line, std::string reason) {
    Log::warn("line " + std::to_string(line) + ": record skipped: " + reason);
    out_.rejected.push_back({line, std::move(reason)});
  }

  void accept(std::size_t line, std::string id, std::string_view date, std::string text) {
    auto parsed = parse_date(date);
    if (!parsed) {
      reject(line, "invalid date '" + std::string(date) + "'");
      return;
    }
    if (id.empty()) {
      reject(line, "empty id");
      return;
    }
    if (auto [it, fresh] = seen_.emplace(id, line); !fresh)
      throw InputError("duplicate document id '" + id + "' on lines " + std::to_string(it->second) +
                       " and " + std::to_string(line));
    out_.documents.push_back(Document{std::move(id), *parsed, std::move(text), {}});
  }

private:
  IngestResult &out_;
  std::unordered_map<std::string, std::size_t> seen_;
};

} // namespace detail

/// Reads documents from JSON-Lines or CSV (with header). Malformed records
/// are skipped and reported with their line number; a duplicate id or an
/// unreadable file throws InputError.
inline IngestResult ingest_documents(std::istream &in, const IngestOptions &opt = {}) {
  IngestResult result;
  detail::IngestSink sink(result);

  if (opt.format == IngestOptions::Format::jsonl) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      nlohmann::json obj;
      try {
        obj = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error &e) {
        sink.reject(lineno, std::string("invalid JSON: ") + e.what());
        continue;
      }
      if (!obj.is_object()) {
        sink.reject(lineno, "not a JSON object");
        continue;
      }
      auto id = detail::json_string(obj, opt.id_field);
      auto date = detail::json_string(obj, opt.date_field);
      auto text = detail::json_string(obj, opt.text_field);
      if (!id || !date || !text) {
        sink.reject(lineno, "missing string field (" + opt.id_field + "/" + opt.date_field + "/" +
                                opt.text_field + ")");
        continue;
      }
      sink.accept(lineno, std::move(*id), *date, std::move(*text));
    }
    return result;
  }

  csv::Reader reader(in);
  auto header = reader.next();
  if (!header) return result;
  auto column = [&](const std::string &name) -> std::size_t {
    auto it = std::find(header->fields.begin(), header->fields.end(), name);
    if (it == header->fields.end()) throw InputError("CSV header lacks column '" + name + "'");
    return static_cast<std::size_t>(it - header->fields.begin());
  };
  const std::size_t id_col = column(opt.id_field), date_col = column(opt.date_field),
                    text_col = column(opt.text_field);
  while (auto rec = reader.next()) {
    if (rec->fields.size() == 1 && rec->fields[0].empty()) continue; // blank line
    if (rec->malformed) {
      sink.reject(rec->line, "malformed CSV quoting");
      continue;
    }
    if (rec->fields.size() != header->fields.size()) {
      sink.reject(rec->line, "expected " + std::to_string(header->fields.size()) + " fields, got " +
                                 std::to_string(rec->fields.size()));
      continue;
    }
    sink.accept(rec->line, std::move(rec->fields[id_col]), rec->fields[date_col],
                std::move(rec->fields[text_col]));
  }
  return result;
}

inline IngestResult ingest_documents(const std::filesystem::path &path, const IngestOptions &opt = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read corpus file " + path.string());
  auto result = ingest_documents(in, opt);
  Log::info("ingested " + path.string() + ": " + std::to_string(result.accepted()) + " accepted, " +
            std::to_string(result.rejected.size()) + " rejected");
  return result;
}

/// Writes documents as JSON-Lines that ingest_documents reads back unchanged.
inline void export_documents(std::ostream &out, const std::vector<Document> &docs,
                             const IngestOptions &opt = {}) {
  for (const auto &d : docs) {
    nlohmann::json obj;
    obj[opt.id_field] = d.id;
    obj[opt.date_field] = d.date.iso();
    obj[opt.text_field] = d.text;
    out << obj.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Topic shares

/// Externally computed document-topic proportions.
class DocTopicTable {
public:
  struct Row {
    std::string doc_id;
    std::string topic_id;
    double share = 0;
  };

  void add(std::string doc_id, std::string topic_id, double share) {
    if (!(share >= 0.0 && share <= 1.0))
      throw InputError("topic share out of [0,1] for document '" + doc_id + "'");
    auto &topics = shares_[doc_id];
    if (!topics.emplace(topic_id, share).second)
      throw InputError("duplicate (document, topic) pair ('" + doc_id + "', '" + topic_id + "')");
    double sum = 0;
    for (const auto &[t, s] : topics) sum += s;
    if (sum > 1.0 + 1e-6) throw InputError("topic shares of document '" + doc_id + "' sum to more than 1");
    topic_ids_.insert(topic_id);
    rows_.push_back({std::move(doc_id), std::move(topic_id), share});
  }

  const std::vector<Row> &rows() const { return rows_; }
  const std::set<std::string> &topics() const { return topic_ids_; }
  bool has_topic(const std::string &topic) const { return topic_ids_.count(topic) > 0; }

  /// Share of `topic` in `doc`; 0 when the pair is not listed.
  double share(const std::string &doc, const std::string &topic) const {
    auto d = shares_.find(doc);
    if (d == shares_.end()) return 0.0;
    auto t = d->second.find(topic);
    return t == d->second.end() ? 0.0 : t->second;
  }

  /// Throws InputError listing the known topics when `topic` is absent.
  void require_topic(const std::string &topic) const {
    if (has_topic(topic)) return;
    std::string known;
    for (const auto &t : topic_ids_) known += (known.empty() ? "" : ", ") + t;
    throw InputError("topic '" + topic + "' not in topic table; known topics: " + known);
  }

private:
  std::vector<Row> rows_;
  std::unordered_map<std::string, std::map<std::string, double>> shares_;
  std::set<std::string> topic_ids_;
};

/// CSV with header doc_id,topic_id,share.
inline DocTopicTable load_doc_topic_table(std::istream &in) {
  DocTopicTable table;
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header || header->fields != std::vector<std::string>{"doc_id", "topic_id", "share"})
    throw InputError("topic table must start with header doc_id,topic_id,share");
  while (auto rec = reader.next()) {
    if (rec->fields.size() == 1 && rec->fields[0].empty()) continue;
    if (rec->malformed || rec->fields.size() != 3)
      throw InputError("topic table line " + std::to_string(rec->line) + ": malformed row");
    double share = 0;
    auto &s = rec->fields[2];
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), share);
    if (ec != std::errc{} || p != s.data() + s.size())
      throw InputError("topic table line " + std::to_string(rec->line) + ": bad share '" + s + "'");
    table.add(std::move(rec->fields[0]), std::move(rec->fields[1]), share);
  }
  return table;
}

inline DocTopicTable load_doc_topic_table(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read topic table " + path.string());
  return load_doc_topic_table(in);
}

// ---------------------------------------------------------------------------
// Sub-corpus selection

namespace detail {
template <class Keep>
SlicedCorpus select_documents(const SlicedCorpus &corpus, Keep keep, const std::string &what) {
  std::vector<Document> kept;
  for (const auto &d : corpus.documents())
    if (keep(d)) kept.push_back(d);
  if (kept.empty()) Log::warn(what + " selected no documents; sub-corpus is empty");
  auto out = assign_time_slices(std::move(kept), corpus.granularity());
  if (corpus.tokenized()) out.mark_tokenized();
  return out;
}
} // namespace detail

/// Keeps documents whose share of `topic` is at least `min_share`; slices are
/// recomputed on the survivors.
inline SlicedCorpus filter_by_topic_share(const SlicedCorpus &corpus, const DocTopicTable &table,
                                          const std::string &topic, double min_share) {
  if (!(min_share > 0.0 && min_share <= 1.0)) throw ConfigError("min_share must be in (0, 1]");
  table.require_topic(topic);
  return detail::select_documents(
      corpus, [&](const Document &d) { return table.share(d.id, topic) >= min_share; },
      "topic filter '" + topic + "' >= " + format_number(min_share));
}

/// Keeps documents with start <= date <= end.
inline SlicedCorpus filter_by_date_range(const SlicedCorpus &corpus, Date start, Date end) {
  if (end < start) throw ConfigError("date range start " + start.iso() + " is after end " + end.iso());
  return detail::select_documents(
      corpus, [&](const Document &d) { return start <= d.date && d.date <= end; },
      "date range " + start.iso() + ".." + end.iso());
}

} // namespace ctxvol
