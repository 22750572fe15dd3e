#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "emx/csv.hpp"
#include "emx/error.hpp"
#include "emx/evaluation.hpp"
#include "emx/explainer.hpp"
#include "emx/json_io.hpp"
#include "emx/record.hpp"

namespace emx {

namespace detail {

inline Side side_from_name(const std::string& s) {
  if (s == "a") return Side::kA;
  if (s == "b") return Side::kB;
  if (s == "joint") return Side::kJoint;
  throw ValidationError("unknown side '" + s + "'");
}

inline Mode mode_from_name(const std::string& s) {
  if (s == "lemon") return Mode::kLemon;
  if (s == "lime") return Mode::kLime;
  throw ValidationError("unknown mode '" + s + "'");
}

inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline std::string states_string(const PerturbationVector& z) {
  std::string s;
  for (auto st : z) s.push_back(state_char(st));
  return s;
}

inline PerturbationVector states_from_string(const std::string& s) {
  PerturbationVector z;
  for (char c : s) {
    if (c == 'P') z.push_back(FeatureState::kPresent);
    else if (c == 'A') z.push_back(FeatureState::kAbsent);
    else if (c == 'M') z.push_back(FeatureState::kMatched);
    else throw ValidationError("bad perturbation state character");
  }
  return z;
}

}  // namespace detail

inline json to_json(const ExplanationEntry& e) {
  const auto& f = e.spec;
  json feature = {
      {"attribute", f.whole_record ? json(nullptr) : json(e.attribute)},
      {"span", {f.start, f.start + f.length}},
      {"side", side_name(f.side)},
      {"location", f.location == TokenLocation::kName ? "name" : "value"},
      {"attribute_index", f.attribute_index},
      {"index", e.feature},
      {"whole_record", f.whole_record},
      {"text", e.text},
  };
  return {{"feature", std::move(feature)}, {"w", e.w}, {"p", e.p}};
}

inline json to_json(const Explanation& e) {
  json entries = json::array();
  for (const auto& x : e.entries) entries.push_back(to_json(x));
  json trials = json::array();
  for (const auto& t : e.trials) {
    trials.push_back({{"granularity", t.granularity}, {"cfs_hat", t.cfs_hat}, {"cfs_actual", t.cfs_actual}});
  }
  const auto& c = e.counterfactual;
  json choices = json::array();
  for (const auto& ch : c.plan.choices) {
    json t = nullptr;
    if (ch.target) t = {{"attribute_index", ch.target->attribute_index}, {"gap", ch.target->gap}};
    choices.push_back({{"feature", ch.feature}, {"target", std::move(t)}});
  }
  return {
      {"pair_id", e.pair_id},
      {"side", side_name(e.side)},
      {"granularity", e.granularity},
      {"threshold", e.threshold},
      {"score", e.score},
      {"entries", std::move(entries)},
      {"cfs_hat", e.cfs_hat},
      {"cfs_actual", e.cfs_actual},
      {"k_g", e.k_g},
      {"seed", e.seed},
      {"mode", mode_name(e.mode)},
      {"include_names", e.include_names},
      {"d_x", e.d_x},
      {"sample_size", e.sample_size},
      {"d_max", e.d_max},
      {"degenerate", e.degenerate},
      {"counterfactual",
       {{"match_side", c.match_side},
        {"order", c.order},
        {"magnitudes", c.magnitudes},
        {"cfs_by_k", c.cfs_by_k},
        {"greedy", detail::states_string(c.greedy)},
        {"realized_score", c.realized_score},
        {"injections", std::move(choices)}}},
      {"trials", std::move(trials)},
  };
}

inline json to_json(const DualExplanation& d) {
  json parts = json::array();
  for (const auto& e : d.parts) parts.push_back(to_json(e));
  return {{"pair_id", d.pair_id}, {"explanations", std::move(parts)}};
}

inline Explanation explanation_from_json(const json& j) {
  try {
    Explanation e;
    e.pair_id = j.at("pair_id").get<std::string>();
    e.side = detail::side_from_name(j.at("side").get<std::string>());
    e.granularity = j.at("granularity").get<std::size_t>();
    e.threshold = j.at("threshold").get<double>();
    e.score = j.at("score").get<double>();
    e.cfs_hat = j.at("cfs_hat").get<double>();
    e.cfs_actual = j.at("cfs_actual").get<double>();
    e.k_g = j.at("k_g").get<std::size_t>();
    e.seed = j.at("seed").get<std::uint64_t>();
    e.mode = detail::mode_from_name(j.value("mode", std::string("lemon")));
    e.include_names = j.value("include_names", false);
    e.d_x = j.value("d_x", std::size_t{0});
    e.sample_size = j.value("sample_size", std::size_t{0});
    e.d_max = j.value("d_max", std::size_t{0});
    e.degenerate = j.value("degenerate", false);
    for (const auto& x : j.at("entries")) {
      const auto& f = x.at("feature");
      ExplanationEntry entry;
      auto span = f.at("span");
      entry.spec.start = span.at(0).get<std::size_t>();
      entry.spec.length = span.at(1).get<std::size_t>() - entry.spec.start;
      entry.spec.side = detail::side_from_name(f.value("side", std::string(side_name(e.side))));
      entry.spec.location = f.value("location", std::string("value")) == "name" ? TokenLocation::kName
                                                                               : TokenLocation::kValue;
      entry.spec.attribute_index = f.value("attribute_index", std::size_t{0});
      entry.spec.granularity = e.granularity;
      entry.spec.whole_record = f.value("whole_record", false);
      entry.attribute = f.at("attribute").is_null() ? std::string() : f.at("attribute").get<std::string>();
      entry.feature = f.value("index", std::size_t{0});
      entry.text = f.value("text", std::string());
      entry.w = x.at("w").get<double>();
      entry.p = x.at("p").get<double>();
      e.entries.push_back(std::move(entry));
    }
    if (j.contains("counterfactual")) {
      const auto& c = j["counterfactual"];
      auto& r = e.counterfactual;
      r.match_side = c.value("match_side", e.score > e.threshold);
      r.order = c.value("order", std::vector<std::size_t>{});
      r.magnitudes = c.value("magnitudes", std::vector<double>{});
      r.cfs_by_k = c.value("cfs_by_k", std::vector<double>{});
      r.greedy = detail::states_from_string(c.value("greedy", std::string()));
      r.realized_score = c.value("realized_score", 0.0);
      r.k_g = e.k_g;
      for (const auto& ch : c.value("injections", json::array())) {
        InjectionChoice choice;
        choice.feature = ch.at("feature").get<std::size_t>();
        if (!ch.at("target").is_null()) {
          InjectionTarget t;
          t.attribute_index = ch["target"].at("attribute_index").get<std::size_t>();
          t.gap = ch["target"].at("gap").get<std::size_t>();
          choice.target = t;
        }
        r.plan.choices.push_back(choice);
      }
    }
    for (const auto& t : j.value("trials", json::array())) {
      e.trials.push_back({t.at("granularity").get<std::size_t>(), t.at("cfs_hat").get<double>(),
                          t.at("cfs_actual").get<double>()});
    }
    return e;
  } catch (const json::exception& ex) {
    throw ValidationError(std::string("malformed explanation JSON: ") + ex.what());
  }
}

inline DualExplanation dual_from_json(const json& j) {
  if (!j.is_object() || !j.contains("explanations") || !j["explanations"].is_array()) {
    throw ValidationError("dual explanation JSON requires an 'explanations' array");
  }
  DualExplanation d;
  d.pair_id = j.value("pair_id", std::string());
  for (const auto& e : j["explanations"]) d.parts.push_back(explanation_from_json(e));
  if (d.parts.empty() || d.parts.size() > 2) throw ValidationError("expected one or two explanations");
  return d;
}

inline json to_json(const ExplainerConfig& c) {
  return {
      {"K", c.K},
      {"epsilon", c.epsilon},
      {"s_min", c.s_min},
      {"s_max", c.s_max},
      {"sample_size", c.sample_size ? json(*c.sample_size) : json(nullptr)},
      {"mode", mode_name(c.mode)},
      {"disable_dual", c.disable_dual},
      {"disable_potential", c.disable_potential},
      {"fixed_granularity", c.fixed_granularity ? json(*c.fixed_granularity) : json(nullptr)},
      {"include_name_features", c.include_name_features},
      {"schema", c.schema == SchemaMatching::kAuto ? "auto" : c.schema == SchemaMatching::kOn ? "on" : "off"},
      {"anchored_intercept", c.anchored_intercept},
      {"literal_cfs", c.literal_cfs},
      {"batch_size", c.batch_size},
      {"seed", c.seed},
  };
}

inline json to_json(const CounterfactualMetrics& m) {
  json outcomes = json::array();
  for (const auto& o : m.outcomes) {
    outcomes.push_back({{"pair_id", o.pair_id},
                        {"recalled", o.recalled},
                        {"picked", o.picked ? json(side_name(*o.picked)) : json(nullptr)},
                        {"realized", detail::optional_number(o.realized)},
                        {"successful", o.successful}});
  }
  return {{"pairs", m.pairs},
          {"recalled", m.recalled},
          {"successful", m.successful},
          {"CR", detail::optional_number(m.CR)},
          {"CP", detail::optional_number(m.CP)},
          {"CF1", detail::optional_number(m.CF1)},
          {"outcomes", std::move(outcomes)}};
}

inline json to_json(const PerturbationErrorReport& r) {
  json recs = json::array();
  for (const auto& x : r.records) {
    std::string states;
    for (auto s : x.states) states.push_back(state_char(s));
    recs.push_back({{"pair_id", x.pair_id},
                    {"side", side_name(x.side)},
                    {"features", x.features},
                    {"states", states},
                    {"deltas", x.deltas},
                    {"predicted", x.predicted},
                    {"realized", x.realized}});
  }
  return {{"experiments", r.experiments},
          {"skipped", r.skipped},
          {"MAE", detail::optional_number(r.MAE)},
          {"PE", detail::optional_number(r.PE)},
          {"records", std::move(recs)}};
}

inline json to_json(const StabilityReport& r) {
  json per = json::array();
  for (std::size_t i = 0; i < r.similarities.size(); ++i) {
    per.push_back({{"pair_id", r.pair_ids[i]}, {"similarity", r.similarities[i]}});
  }
  return {{"mean", detail::optional_number(r.mean)}, {"pairs", std::move(per)}};
}

inline json to_json(const std::vector<SweepRow>& rows, SweepAxis axis) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"axis", axis_name(axis)},
                   {"value", r.value},
                   {"cf1", detail::optional_number(r.cf1)},
                   {"pe", detail::optional_number(r.pe)},
                   {"stability", detail::optional_number(r.stability)},
                   {"median_seconds", detail::optional_number(r.median_seconds)}});
  }
  return out;
}

/// Writes a header row and one row per JSON object of `rows`, in the order
/// of `columns`; null and missing values become empty cells.
inline void write_csv_table(std::ostream& out, const std::vector<std::string>& columns, const json& rows) {
  csv::Row header;
  for (const auto& c : columns) header.push_back({c, false});
  csv::write_row(out, header);
  for (const auto& r : rows) {
    csv::Row row;
    for (const auto& c : columns) {
      if (!r.contains(c) || r[c].is_null()) {
        row.push_back({"", true});
      } else if (r[c].is_string()) {
        row.push_back({r[c].get<std::string>(), false});
      } else if (r[c].is_number_float()) {
        row.push_back({format_number(r[c].get<double>()), false});
      } else {
        row.push_back({r[c].dump(), false});
      }
    }
    csv::write_row(out, row);
  }
}

}  // namespace emx
