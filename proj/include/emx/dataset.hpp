#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "emx/csv.hpp"
#include "emx/error.hpp"
#include "emx/record.hpp"
#include "emx/tokenize.hpp"

namespace emx {

enum class Label { kNonMatch = 0, kMatch = 1 };

struct LabeledPair {
  std::size_t a_index = 0;
  std::size_t b_index = 0;
  Label label = Label::kNonMatch;
  bool operator==(const LabeledPair&) const = default;
};

/// Two tables plus labelled candidate splits in the DeepMatcher layout.
struct Dataset {
  std::vector<Record> table_a;
  std::vector<Record> table_b;
  std::vector<std::string> ids_a;  // original `id` column text, parallel to table_a
  std::vector<std::string> ids_b;
  std::map<std::string, std::vector<LabeledPair>> splits;

  const std::vector<LabeledPair>& split(const std::string& name) const {
    auto it = splits.find(name);
    if (it == splits.end()) throw ConfigError("dataset has no split '" + name + "'");
    return it->second;
  }

  RecordPair pair(const std::string& split_name, std::size_t row) const {
    const auto& s = split(split_name);
    if (row >= s.size()) {
      throw ConfigError("row " + std::to_string(row) + " out of range for split '" +
                        split_name + "'");
    }
    return {table_a[s[row].a_index], table_b[s[row].b_index], split_name + "-" + std::to_string(row)};
  }

  std::size_t candidate_count() const {
    std::size_t n = 0;
    for (const auto& [_, s] : splits) n += s.size();
    return n;
  }

  std::size_t match_count() const {
    std::size_t n = 0;
    for (const auto& [_, s] : splits) {
      for (const auto& p : s) n += p.label == Label::kMatch;
    }
    return n;
  }

  bool operator==(const Dataset&) const = default;
};

inline const std::vector<std::string>& split_names() {
  static const std::vector<std::string> names = {"train", "valid", "test"};
  return names;
}

namespace detail {

struct LoadedTable {
  std::vector<Record> records;
  std::vector<std::string> ids;
  std::unordered_map<std::string, std::size_t> index_of;
};

inline LoadedTable load_table(const std::filesystem::path& path, std::optional<std::size_t> max_words) {
  if (!std::filesystem::exists(path)) throw LoadError(path.string(), "missing file");
  auto rows = csv::read(path.string());
  if (rows.empty()) throw ValidationError("empty table: " + path.string());
  const auto& header = rows.front();
  std::optional<std::size_t> id_col;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c].text == "id") id_col = c;
  }
  if (!id_col) throw ValidationError("table has no 'id' column: " + path.string());

  const std::size_t ncols = header.size();
  std::vector<bool> numeric(ncols, true);
  std::vector<bool> any_value(ncols, false);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != ncols) {
      throw ValidationError(path.string() + ": row " + std::to_string(r) + " has " +
                            std::to_string(rows[r].size()) + " cells, expected " +
                            std::to_string(ncols));
    }
    for (std::size_t c = 0; c < ncols; ++c) {
      const auto& cell = rows[r][c];
      if (cell.missing) continue;
      any_value[c] = true;
      if (numeric[c] && !parse_number(cell.text)) numeric[c] = false;
    }
  }

  LoadedTable t;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    std::vector<Attribute> attrs;
    for (std::size_t c = 0; c < ncols; ++c) {
      if (c == *id_col) continue;
      const auto& cell = rows[r][c];
      AttributeValue v;
      if (cell.missing) {
        v = AttributeValue::null();
      } else if (numeric[c] && any_value[c]) {
        v = AttributeValue::number(*parse_number(cell.text));
      } else {
        v = AttributeValue::text(cell.text);
      }
      attrs.push_back({header[c].text, std::move(v)});
    }
    Record rec(std::move(attrs));
    if (max_words) rec = truncate_record(rec, *max_words);
    const std::string& id = rows[r][*id_col].text;
    if (!t.index_of.emplace(id, t.records.size()).second) {
      throw ValidationError(path.string() + ": duplicate id '" + id + "'");
    }
    t.ids.push_back(id);
    t.records.push_back(std::move(rec));
  }
  return t;
}

}  // namespace detail

struct LoadOptions {
  /// Cap on words per record, e.g. 256 for long textual datasets.
  std::optional<std::size_t> max_words;
};

/// Loads tableA.csv, tableB.csv and train/valid/test.csv from `dir`.
inline Dataset load_benchmark_dataset(const std::filesystem::path& dir, const LoadOptions& opts = {}) {
  if (!std::filesystem::is_directory(dir)) throw LoadError(dir.string(), "not a dataset directory");
  for (const char* f : {"tableA.csv", "tableB.csv", "train.csv", "valid.csv", "test.csv"}) {
    if (!std::filesystem::exists(dir / f)) throw LoadError((dir / f).string(), "missing file");
  }
  auto ta = detail::load_table(dir / "tableA.csv", opts.max_words);
  auto tb = detail::load_table(dir / "tableB.csv", opts.max_words);

  Dataset ds;
  std::vector<std::string> dangling;
  for (const auto& name : split_names()) {
    auto path = dir / (name + ".csv");
    auto rows = csv::read(path.string());
    if (rows.empty()) throw ValidationError("empty split file: " + path.string());
    std::optional<std::size_t> lc, rc, yc;
    for (std::size_t c = 0; c < rows[0].size(); ++c) {
      const auto& h = rows[0][c].text;
      if (h == "ltable_id") lc = c;
      if (h == "rtable_id") rc = c;
      if (h == "label") yc = c;
    }
    if (!lc || !rc || !yc) {
      throw ValidationError(path.string() + ": expected columns ltable_id, rtable_id, label");
    }
    auto& out = ds.splits[name];
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& row = rows[r];
      if (row.size() <= std::max({*lc, *rc, *yc})) {
        throw ValidationError(path.string() + ": short row " + std::to_string(r));
      }
      auto ia = ta.index_of.find(row[*lc].text);
      auto ib = tb.index_of.find(row[*rc].text);
      if (ia == ta.index_of.end() || ib == tb.index_of.end()) {
        dangling.push_back(name + ".csv row " + std::to_string(r) + " (ltable_id=" + row[*lc].text +
                           ", rtable_id=" + row[*rc].text + ")");
        continue;
      }
      const auto& lab = row[*yc].text;
      Label label;
      if (lab == "1" || lab == "1.0") {
        label = Label::kMatch;
      } else if (lab == "0" || lab == "0.0") {
        label = Label::kNonMatch;
      } else {
        throw ValidationError(path.string() + ": non-binary label '" + lab + "' at row " +
                              std::to_string(r));
      }
      out.push_back({ia->second, ib->second, label});
    }
  }
  if (!dangling.empty()) {
    std::string msg = "dangling ids in splits:";
    for (const auto& d : dangling) msg += "\n  " + d;
    throw ValidationError(msg);
  }
  ds.table_a = std::move(ta.records);
  ds.table_b = std::move(tb.records);
  ds.ids_a = std::move(ta.ids);
  ds.ids_b = std::move(tb.ids);
  return ds;
}

namespace detail {

inline csv::Cell value_cell(const AttributeValue& v) {
  if (v.is_null()) return {"", true};
  return {v.to_string(), false};
}

inline void save_table(const std::filesystem::path& path, const std::vector<Record>& recs,
                       const std::vector<std::string>& ids) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError(path.string(), "cannot write file");
  csv::Row header{{"id", false}};
  if (!recs.empty()) {
    for (const auto& a : recs.front().attributes()) header.push_back({a.name, false});
  }
  csv::write_row(out, header);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    csv::Row row{{ids.size() > i ? ids[i] : std::to_string(i), false}};
    for (const auto& a : recs[i].attributes()) row.push_back(value_cell(a.value));
    csv::write_row(out, row);
  }
}

}  // namespace detail

/// Writes `ds` in the layout read by load_benchmark_dataset.
inline void save_benchmark_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  detail::save_table(dir / "tableA.csv", ds.table_a, ds.ids_a);
  detail::save_table(dir / "tableB.csv", ds.table_b, ds.ids_b);
  for (const auto& name : split_names()) {
    std::ofstream out(dir / (name + ".csv"), std::ios::binary);
    if (!out) throw LoadError((dir / (name + ".csv")).string(), "cannot write file");
    csv::write_row(out, {{"ltable_id", false}, {"rtable_id", false}, {"label", false}});
    auto it = ds.splits.find(name);
    if (it == ds.splits.end()) continue;
    for (const auto& p : it->second) {
      csv::write_row(out, {{ds.ids_a[p.a_index], false},
                           {ds.ids_b[p.b_index], false},
                           {p.label == Label::kMatch ? "1" : "0", false}});
    }
  }
}

/// FNV-1a over the serialized tables and splits; stable across platforms.
inline std::uint64_t dataset_fingerprint(const Dataset& ds) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
    h ^= 0xff;
    h *= 1099511628211ull;
  };
  for (const auto* table : {&ds.table_a, &ds.table_b}) {
    for (const auto& r : *table) {
      for (const auto& a : r.attributes()) {
        mix(a.name);
        mix(a.value.is_null() ? std::string("\x01null") : a.value.to_string());
      }
    }
  }
  for (const auto& [name, s] : ds.splits) {
    mix(name);
    for (const auto& p : s) {
      mix(std::to_string(p.a_index) + "," + std::to_string(p.b_index) + "," +
          std::to_string(static_cast<int>(p.label)));
    }
  }
  return h;
}

}  // namespace emx
