// emx: train a baseline matcher, explain pairs, evaluate explainers, render
// reports and write desk datasets.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "emx/emx.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitMatcher = 3;

/// Reads flag values from a JSON object. Nested objects name subcommands,
/// e.g. {"seed": 3, "explain": {"K": 4}}; top-level keys go to the invoked
/// subcommand when it has that flag.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* app) : app_(app) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    emx::json j;
    try {
      input >> j;
    } catch (const emx::json::exception& e) {
      throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
    }
    std::vector<CLI::ConfigItem> items;
    flatten(j, {}, items);
    for (auto& item : items) {
      if (!item.parents.empty()) continue;
      for (const auto* sub : app_->get_subcommands()) {
        if (sub->get_option_no_throw("--" + item.name)) item.parents = {sub->get_name()};
      }
    }
    return items;
  }

 private:
  const CLI::App* app_;

  static std::string scalar(const emx::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void flatten(const emx::json& j, std::vector<std::string> parents, std::vector<CLI::ConfigItem>& out) {
    if (!j.is_object()) throw CLI::ConversionError("config must be a JSON object");
    for (const auto& [key, v] : j.items()) {
      if (v.is_object()) {
        auto p = parents;
        p.push_back(key);
        flatten(v, p, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (v.is_array()) {
        for (const auto& x : v) item.inputs.push_back(scalar(x));
      } else {
        item.inputs.push_back(scalar(v));
      }
      out.push_back(std::move(item));
    }
  }
};

struct MatcherArgs {
  std::string model;
  std::string command;
  std::string url;
  int timeout_ms = 120000;

  std::unique_ptr<emx::Matcher> open() const {
    int given = !model.empty() + !command.empty() + !url.empty();
    if (given != 1) throw emx::ConfigError("give exactly one of --matcher, --matcher-cmd, --matcher-url");
    if (!model.empty()) return std::make_unique<emx::BaselineMatcher>(emx::load_baseline_model(model));
    if (!command.empty()) return std::make_unique<emx::StdioMatcher>(command, timeout_ms);
    return std::make_unique<emx::HttpMatcher>(url, timeout_ms / 1000);
  }
};

struct ExplainerArgs {
  std::size_t K = 5;
  double epsilon = 0.1;
  std::size_t s_min = 500;
  std::size_t s_max = 3000;
  std::optional<std::size_t> sample_size;
  std::string explainer = "lemon";
  std::vector<std::string> ablate;
  bool include_names = false;
  std::string schema = "auto";
  bool literal_cfs = false;
  bool free_intercept = false;
  std::size_t batch_size = 64;

  emx::ExplainerSpec spec(std::uint64_t seed) const {
    emx::ExplainerSpec s;
    auto& c = s.config;
    c.K = K;
    c.epsilon = epsilon;
    c.s_min = s_min;
    c.s_max = s_max;
    c.sample_size = sample_size;
    c.include_name_features = include_names;
    c.literal_cfs = literal_cfs;
    c.anchored_intercept = !free_intercept;
    c.batch_size = batch_size;
    c.seed = seed;
    if (schema == "on") c.schema = emx::SchemaMatching::kOn;
    else if (schema == "off") c.schema = emx::SchemaMatching::kOff;
    else c.schema = emx::SchemaMatching::kAuto;
    if (explainer == "lime") {
      s.lime = true;
    } else if (explainer != "lemon") {
      throw emx::ConfigError("--explainer must be lemon or lime");
    }
    for (const auto& a : ablate) {
      if (a == "no-dual") {
        c.disable_dual = true;
      } else if (a == "no-potential") {
        c.disable_potential = true;
      } else if (a.rfind("granularity=", 0) == 0) {
        const std::string v = a.substr(12);
        try {
          std::size_t used = 0;
          long long n = std::stoll(v, &used);
          if (used != v.size() || n < 1) throw std::invalid_argument(v);
          c.fixed_granularity = static_cast<std::size_t>(n);
        } catch (const std::exception&) {
          throw emx::ConfigError("--ablate granularity=N needs a positive integer");
        }
      } else {
        throw emx::ConfigError("unknown ablation '" + a + "' (no-dual, no-potential, granularity=N)");
      }
    }
    c.validate();
    return s;
  }

  void add_to(CLI::App* cmd) {
    cmd->add_option("--K", K, "Features per explanation")->capture_default_str();
    cmd->add_option("--epsilon", epsilon, "Counterfactual margin")->capture_default_str();
    cmd->add_option("--s-min", s_min, "Minimum neighborhood size")->capture_default_str();
    cmd->add_option("--s-max", s_max, "Maximum neighborhood size")->capture_default_str();
    cmd->add_option("--sample-size", sample_size, "Fixed neighborhood size");
    cmd->add_option("--explainer", explainer, "lemon or lime")->capture_default_str();
    cmd->add_option("--ablate", ablate, "no-dual | no-potential | granularity=N");
    cmd->add_flag("--include-names", include_names, "Attribute names as features");
    cmd->add_option("--schema", schema, "Same-name injection preference: auto, on, off")->capture_default_str();
    cmd->add_flag("--literal-cfs", literal_cfs, "Literal actual-strength algebra");
    cmd->add_flag("--free-intercept", free_intercept, "Regress on raw scores instead of y - f(x)");
    cmd->add_option("--batch-size", batch_size, "Matcher batch size")->capture_default_str();
  }
};

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw emx::LoadError(path.string(), "cannot write");
  out << content;
}

emx::RecordPair find_pair(const emx::Dataset& ds, const std::string& split, const std::string& id) {
  std::string s = split;
  std::string row = id;
  if (auto dash = id.rfind('-'); dash != std::string::npos) {
    s = id.substr(0, dash);
    row = id.substr(dash + 1);
  }
  std::size_t used = 0;
  unsigned long long r = 0;
  try {
    r = std::stoull(row, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != row.size()) throw emx::ConfigError("bad --pair-id '" + id + "'");
  const auto& rows = ds.split(s);
  if (r >= rows.size()) throw emx::ConfigError("--pair-id " + id + " out of range for split " + s);
  return ds.pair(s, static_cast<std::size_t>(r));
}

std::vector<emx::Label> classes_for(const std::string& cls) {
  if (cls == "match") return {emx::Label::kMatch};
  if (cls == "nonmatch") return {emx::Label::kNonMatch};
  if (cls == "both") return {emx::Label::kMatch, emx::Label::kNonMatch};
  throw emx::ConfigError("--class must be match, nonmatch or both");
}

/// A threshold the matcher did not announce is marked as defaulted.
emx::json matcher_meta(const emx::Matcher& m) {
  return {{"threshold", m.threshold()}, {"threshold_defaulted", m.threshold_defaulted()}};
}

const char* class_name(emx::Label l) { return l == emx::Label::kMatch ? "match" : "nonmatch"; }

std::string hex(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << v;
  return s.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explain entity-matching decisions of black-box matchers"};
  app.config_formatter(std::make_shared<JsonConfig>(&app));
  app.set_config("--config", "", "JSON file with flag values");
  app.require_subcommand(1);

  std::optional<std::uint64_t> seed;
  std::string dataset;
  std::optional<std::size_t> max_words;
  MatcherArgs matcher_args;
  ExplainerArgs ex_args;

  auto add_dataset = [&](CLI::App* cmd) {
    cmd->add_option("--dataset", dataset, "Dataset directory (tableA/tableB/train/valid/test CSV)")->required();
    cmd->add_option("--max-words", max_words, "Truncate text values to this many words per record");
  };
  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Global seed")->envname("EM_EXPLAIN_SEED");
  };
  auto add_matcher = [&](CLI::App* cmd) {
    cmd->add_option("--matcher", matcher_args.model, "Baseline model file");
    cmd->add_option("--matcher-cmd", matcher_args.command, "External matcher command (stdio)");
    cmd->add_option("--matcher-url", matcher_args.url, "External matcher base URL (HTTP)");
    cmd->add_option("--matcher-timeout-ms", matcher_args.timeout_ms, "External matcher timeout");
  };
  auto load = [&] {
    emx::LoadOptions o;
    o.max_words = max_words;
    return emx::load_benchmark_dataset(dataset, o);
  };
  auto need_seed = [&]() -> std::uint64_t {
    if (!seed) throw emx::ConfigError("--seed (or EM_EXPLAIN_SEED) is required");
    return *seed;
  };

  // train
  auto* train = app.add_subcommand("train", "Train the baseline similarity matcher");
  add_dataset(train);
  add_seed(train);
  std::string model_out;
  emx::TrainConfig tcfg;
  train->add_option("--out", model_out, "Model file to write")->required();
  train->add_option("--epochs", tcfg.epochs)->capture_default_str();
  train->add_option("--learning-rate", tcfg.learning_rate)->capture_default_str();
  train->add_option("--l2", tcfg.l2)->capture_default_str();
  train->add_option("--threshold", tcfg.threshold)->capture_default_str();

  // explain
  auto* explain = app.add_subcommand("explain", "Explain one record pair");
  add_dataset(explain);
  add_seed(explain);
  add_matcher(explain);
  ex_args.add_to(explain);
  std::string pair_id, split = "test", html_out, json_out;
  explain->add_option("--pair-id", pair_id, "Row of --split, or <split>-<row>")->required();
  explain->add_option("--split", split)->capture_default_str();
  explain->add_option("--html", html_out, "Also render to this HTML file");
  explain->add_option("--out", json_out, "Write the JSON here instead of stdout");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Counterfactual F1, perturbation error, stability, sweeps");
  add_dataset(evaluate);
  add_seed(evaluate);
  add_matcher(evaluate);
  ex_args.add_to(evaluate);
  std::string metric = "cf1", cls = "both", out_dir, axis = "sample_size";
  std::size_t n_pairs = 500, workers = 1;
  std::vector<std::uint64_t> seeds;
  std::vector<std::size_t> axis_values;
  evaluate->add_option("--metric", metric, "cf1, pe, stability or sweep")->capture_default_str();
  evaluate->add_option("--class", cls, "Predicted class: match, nonmatch or both")->capture_default_str();
  evaluate->add_option("--n", n_pairs, "Pairs per class")->capture_default_str();
  evaluate->add_option("--split", split)->capture_default_str();
  evaluate->add_option("--seeds", seeds, "Seeds for stability (at least two)")->delimiter(',');
  evaluate->add_option("--workers", workers, "Parallel workers across pairs")->capture_default_str();
  evaluate->add_option("--out", out_dir, "Directory for JSON and CSV reports");
  evaluate->add_option("--axis", axis, "Sweep axis: sample_size, K or runtime")->capture_default_str();
  evaluate->add_option("--values", axis_values, "Sweep axis values")->delimiter(',');

  // render
  auto* render = app.add_subcommand("render", "Render explain output as HTML");
  std::string render_in, render_out;
  render->add_option("--in", render_in, "JSON written by explain")->required();
  render->add_option("--out", render_out, "HTML file")->required();

  // synth
  auto* synth = app.add_subcommand("synth", "Write a desk dataset (beer or restaurants)");
  std::string synth_name, synth_out;
  std::uint64_t synth_seed = 2024;
  synth->add_option("--name", synth_name, "beer or restaurants")->required();
  synth->add_option("--out", synth_out, "Output directory")->required();
  synth->add_option("--seed", synth_seed, "Generator seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train) {
      tcfg.seed = need_seed();
      auto ds = load();
      auto model = emx::train_baseline_matcher(ds, tcfg);
      emx::save_baseline_model(model, model_out);
      emx::json out = {{"model", model_out},
                       {"validation_f1", model.validation_f1 ? emx::json(*model.validation_f1) : emx::json(nullptr)},
                       {"dataset_hash", hex(emx::dataset_fingerprint(ds))}};
      std::cout << out.dump() << "\n";
    } else if (*explain) {
      const auto s = need_seed();
      auto spec = ex_args.spec(s);
      auto ds = load();
      auto pair = find_pair(ds, split, pair_id);
      auto matcher = matcher_args.open();
      auto dual = spec.explainer()(*matcher, pair, s);
      emx::json j = emx::to_json(dual);
      j["explainer"] = spec.name();
      j["config"] = emx::to_json(spec.config);
      j["pair"] = emx::to_json(pair);
      j["matcher"] = matcher_meta(*matcher);
      const std::string text = j.dump(2) + "\n";
      if (json_out.empty()) {
        std::cout << text;
      } else {
        write_file(json_out, text);
      }
      if (!html_out.empty()) write_file(html_out, emx::render(dual, pair).html);
    } else if (*evaluate) {
      const auto s = need_seed();
      auto spec = ex_args.spec(s);
      auto ds = load();
      auto matcher = matcher_args.open();
      emx::EvalOptions eo;
      eo.seed = s;
      eo.epsilon = spec.config.epsilon;
      eo.workers = workers;
      eo.translate = spec.config.translate();
      emx::json report = {{"metric", metric},
                          {"explainer", spec.name()},
                          {"config", emx::to_json(spec.config)},
                          {"seed", s},
                          {"split", split},
                          {"dataset", dataset},
                          {"dataset_hash", hex(emx::dataset_fingerprint(ds))},
                          {"matcher", matcher_meta(*matcher)},
                          {"results", emx::json::array()}};
      emx::json rows = emx::json::array();
      std::vector<std::string> columns;
      auto ex = spec.explainer();
      for (auto label : classes_for(cls)) {
        auto pairs = emx::select_pairs(ds, split, *matcher, label, n_pairs, s, spec.config.batch_size);
        emx::json result = {{"class", class_name(label)}, {"pairs", pairs.size()}};
        if (metric == "cf1") {
          auto m = emx::counterfactual_metrics(ex, *matcher, pairs, eo);
          result["metrics"] = emx::to_json(m);
          rows.push_back({{"class", class_name(label)}, {"pairs", m.pairs}, {"recalled", m.recalled},
                          {"successful", m.successful}, {"CR", result["metrics"]["CR"]},
                          {"CP", result["metrics"]["CP"]}, {"CF1", result["metrics"]["CF1"]}});
          columns = {"class", "pairs", "recalled", "successful", "CR", "CP", "CF1"};
        } else if (metric == "pe") {
          auto r = emx::perturbation_error(ex, *matcher, pairs, eo);
          result["metrics"] = emx::to_json(r);
          rows.push_back({{"class", class_name(label)}, {"experiments", r.experiments}, {"skipped", r.skipped},
                          {"MAE", result["metrics"]["MAE"]}, {"PE", result["metrics"]["PE"]}});
          columns = {"class", "experiments", "skipped", "MAE", "PE"};
        } else if (metric == "stability") {
          if (seeds.empty()) seeds = {s, s + 1};
          auto r = emx::stability(ex, *matcher, pairs, seeds, workers);
          result["metrics"] = emx::to_json(r);
          result["seeds"] = seeds;
          rows.push_back({{"class", class_name(label)}, {"pairs", pairs.size()}, {"stability", result["metrics"]["mean"]}});
          columns = {"class", "pairs", "stability"};
        } else if (metric == "sweep") {
          emx::SweepOptions so;
          if (axis == "sample_size") so.axis = emx::SweepAxis::kSampleSize;
          else if (axis == "K") so.axis = emx::SweepAxis::kK;
          else if (axis == "runtime") so.axis = emx::SweepAxis::kRuntime;
          else throw emx::ConfigError("--axis must be sample_size, K or runtime");
          so.values = axis_values;
          so.seeds = seeds.empty() ? std::vector<std::uint64_t>{s, s + 1} : seeds;
          so.eval = eo;
          if (so.axis == emx::SweepAxis::kRuntime) so.eval.workers = 1;
          auto table = emx::sweep(spec, *matcher, pairs, so);
          result["rows"] = emx::to_json(table, so.axis);
          for (auto row : result["rows"]) {
            row["class"] = class_name(label);
            rows.push_back(row);
          }
          columns = {"class", "axis", "value", "cf1", "pe", "stability", "median_seconds"};
        } else {
          throw emx::ConfigError("--metric must be cf1, pe, stability or sweep");
        }
        report["results"].push_back(std::move(result));
      }
      report["table"] = rows;
      if (!out_dir.empty()) {
        write_file(fs::path(out_dir) / (metric + ".json"), report.dump(2) + "\n");
        std::ostringstream csv;
        emx::write_csv_table(csv, columns, rows);
        write_file(fs::path(out_dir) / (metric + ".csv"), csv.str());
      }
      std::cout << rows.dump() << "\n";
    } else if (*render) {
      std::ifstream in(render_in);
      if (!in) throw emx::LoadError(render_in, "cannot read");
      emx::json j;
      try {
        in >> j;
      } catch (const emx::json::exception& e) {
        throw emx::ValidationError(std::string("not JSON: ") + e.what());
      }
      if (!j.contains("pair")) throw emx::ValidationError("explain output lacks the 'pair' field");
      auto dual = emx::dual_from_json(j);
      auto pair = emx::pair_from_json(j["pair"]);
      auto r = emx::render(dual, pair);
      write_file(render_out, r.html);
      std::cout << r.summary << "\n";
    } else if (*synth) {
      auto ds = emx::desk::by_name(synth_name, synth_seed);
      emx::save_benchmark_dataset(ds, synth_out);
      emx::json out = {{"dataset", synth_out},
                       {"candidates", ds.candidate_count()},
                       {"matches", ds.match_count()},
                       {"dataset_hash", hex(emx::dataset_fingerprint(ds))}};
      std::cout << out.dump() << "\n";
    }
  } catch (const emx::MatcherError& e) {
    std::cerr << "matcher error: " << e.what() << "\n";
    return kExitMatcher;
  } catch (const emx::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return 0;
}
