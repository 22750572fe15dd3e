// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "emx/emx.hpp"

using namespace emx;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void verdict(bool ok, const std::string& name, const std::string& detail) {
  std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 3) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

std::size_t workers() { return std::max(1u, std::thread::hardware_concurrency()); }

// ---------------------------------------------------------------------------
// formulas

struct Checks {
  double worst = 0.0;
  std::vector<std::string> bad;

  void near(const std::string& what, double got, double want, double tol = 1e-12) {
    worst = std::max(worst, std::abs(got - want));
    if (!(std::abs(got - want) <= tol)) bad.push_back(what + " = " + std::to_string(got) + ", want " + std::to_string(want));
  }
  void eq(const std::string& what, std::size_t got, std::size_t want) {
    if (got != want) bad.push_back(what + " = " + std::to_string(got) + ", want " + std::to_string(want));
  }
};

Explanation single_part(const std::vector<std::tuple<std::size_t, std::size_t, double, double>>& entries) {
  Explanation e;
  e.side = Side::kA;
  for (auto [start, len, w, p] : entries) {
    ExplanationEntry en;
    en.spec.side = Side::kA;
    en.spec.start = start;
    en.spec.length = len;
    en.w = w;
    en.p = p;
    e.entries.push_back(en);
  }
  return e;
}

void formula_suite() {
  auto t0 = Clock::now();
  Checks c;
  c.near("kernel(0)", kernel_weight(0, 5), 1.0);
  c.near("kernel(D_max)", kernel_weight(5, 5), std::exp(-2.0));
  c.near("kernel(D_max/2)", kernel_weight(4, 8), std::exp(-1.0));
  c.eq("S(10)", sample_size(10), 500);
  c.eq("S(50)", sample_size(50), 1500);
  c.eq("S(200)", sample_size(200), 3000);
  c.eq("D_max(10)", d_max_for(10), 5);
  c.eq("D_max(12)", d_max_for(12), 5);
  c.eq("D_max(60)", d_max_for(60), 12);
  c.eq("M-subset(12)", max_matched_subset(12), 4);
  c.eq("M-subset(6)", max_matched_subset(6), 3);
  c.eq("M-subset(30)", max_matched_subset(30), 10);

  c.near("CFS^(0.9,DEC,k=1)", predicted_cfs(0.9, 0.5, {0.3, 0.2}, 1), -0.1);
  c.near("CFS^(0.9,DEC,k=2)", predicted_cfs(0.9, 0.5, {0.3, 0.2}, 2), 0.1);
  c.near("CFS^(0.2,INC,k=2)", predicted_cfs(0.2, 0.5, {0.25, 0.2}, 2), 0.15);
  c.near("CFS^(match,k=0)", predicted_cfs(0.9, 0.5, {0.3}, 0), 0.5 - 0.9);
  c.near("CFS^(nonmatch,k=0)", predicted_cfs(0.2, 0.5, {0.3}, 0), 0.2 - 0.5);
  c.eq("k_g(example)", greedy_k(0.9, 0.5, {0.3, 0.2}, 0.1), 2);
  c.eq("k_g(fallback)", greedy_k(0.6, 0.5, {0.1, 0.1, 0.1, 0.1}, 0.5), 4);
  c.eq("k_g(empty)", greedy_k(0.2, 0.5, {}, 0.1), 0);
  c.near("CFS(0.3)", actual_cfs(0.9, 0.5, 0.3), 0.2);
  c.near("CFS(boundary)", actual_cfs(0.9, 0.5, 0.5), 0.0);
  c.near("CFS(0.65)", actual_cfs(0.2, 0.5, 0.65), 0.15);

  std::vector<PerturbationExperiment> xs(2);
  xs[0].deltas = {0.2};
  xs[0].predicted = 0.7;
  xs[0].realized = 0.8;
  xs[1].deltas = {-0.2};
  xs[1].predicted = 0.3;
  xs[1].realized = 0.2;
  auto pe = summarize(xs, 0);
  c.near("MAE", pe.MAE.value_or(-1), 0.1);
  c.near("PE", pe.PE.value_or(-1), 0.5);

  auto e1 = single_part({{0, 1, 0.4, 0.0}});
  auto e2 = single_part({{0, 1, 0.2, 0.0}});
  auto mixed = single_part({{0, 1, 0.4, 0.1}, {3, 2, -0.2, 0.3}});
  c.near("s(e1,e2)", explanation_similarity(e1, e2), 0.5);
  c.near("s(e2,e1)", explanation_similarity(e2, e1), 0.5);
  c.near("s(e,e)", explanation_similarity(mixed, mixed), 1.0);
  c.near("s(disjoint)", explanation_similarity(e1, single_part({{1, 1, 0.4, 0.0}})), 0.0);
  c.near("s(opposite signs)", explanation_similarity(e1, single_part({{0, 1, -0.4, 0.0}})), 0.0);

  const double t = seconds_since(t0);
  std::ostringstream worst;
  worst << std::scientific << std::setprecision(1) << c.worst;
  std::string detail = "max abs error " + worst.str() + ", " + fmt(t, 4) + " s";
  for (const auto& b : c.bad) detail += "; " + b;
  verdict(c.bad.empty() && t < 1.0, "formula suite (tolerance 1e-12, < 1 s)", detail);
}

// ---------------------------------------------------------------------------
// surrogate oracle

/// Anchored WLS on A/M indicators of `features`; returns (weighted SSE, beta).
std::pair<double, Eigen::VectorXd> wls(const std::vector<NeighborhoodEntry>& rows, double f_x,
                                       const std::vector<std::size_t>& features, bool lemon) {
  const std::size_t per = lemon ? 2 : 1;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto k = static_cast<Eigen::Index>(features.size() * per);
  Eigen::MatrixXd X = Eigen::MatrixXd::Zero(n, k);
  Eigen::VectorXd y(n), w(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& e = rows[static_cast<std::size_t>(r)];
    y(r) = e.y - f_x;
    w(r) = e.weight;
    for (std::size_t j = 0; j < features.size(); ++j) {
      X(r, static_cast<Eigen::Index>(j * per)) = e.z[features[j]] == FeatureState::kAbsent;
      if (lemon) X(r, static_cast<Eigen::Index>(j * per + 1)) = e.z[features[j]] == FeatureState::kMatched;
    }
  }
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  if (k > 0) {
    Eigen::MatrixXd XtW = X.transpose() * w.asDiagonal();
    beta = (XtW * X).completeOrthogonalDecomposition().solve(XtW * y);
  }
  Eigen::VectorXd res = y - X * beta;
  return {res.dot(w.asDiagonal() * res), beta};
}

struct Synthetic {
  RecordPair pair;
  std::vector<double> c;   // removal effect of token i on side a
  std::vector<double> m;   // effect of token i showing up in record b
  double interaction = 0;  // extra score when tokens 0 and 1 are both present in a
};

std::string tok(std::size_t i) { return "tok" + std::to_string(i); }

double synthetic_score(const Synthetic& s, const RecordPair& q) {
  std::map<std::string, int> a, b;
  for (const auto& attr : q.a.attributes()) {
    for (const auto& t : tokenize(attr.value)) ++a[t];
  }
  for (const auto& attr : q.b.attributes()) {
    for (const auto& t : tokenize(attr.value)) ++b[t];
  }
  double y = 0.5;
  for (std::size_t i = 0; i < s.c.size(); ++i) {
    if (a.count(tok(i))) y += s.c[i];
    if (b.count(tok(i))) y += s.m[i];
  }
  if (a.count(tok(0)) && a.count(tok(1))) y += s.interaction;
  return y;
}

Synthetic make_synthetic(std::size_t d, std::uint64_t seed, double interaction) {
  Rng rng(seed);
  Synthetic s;
  std::string text;
  for (std::size_t i = 0; i < d; ++i) {
    s.c.push_back(0.08 * (rng.uniform01() - 0.5));
    s.m.push_back(0.04 * rng.uniform01());
    text += (i ? " " : "") + tok(i);
  }
  s.interaction = interaction;
  s.pair = {Record({{"title", AttributeValue::text(text)}}), Record({{"title", AttributeValue::text("other")}}),
            "synthetic-" + std::to_string(seed)};
  return s;
}

/// Oracle coefficients from the WLS over every vector of {P, A, M}^d, with
/// scores computed in closed form from the additive model.
std::pair<std::vector<double>, std::vector<double>> enumeration_oracle(const Synthetic& s) {
  const std::size_t d = s.c.size();
  const std::size_t dmax = d_max_for(d);
  const double f_x = 0.5 + std::accumulate(s.c.begin(), s.c.end(), 0.0) + s.interaction;
  std::vector<NeighborhoodEntry> rows;
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= 3;
  for (std::size_t code = 0; code < total; ++code) {
    PerturbationVector z(d);
    double y = f_x;
    std::size_t rest = code;
    for (std::size_t i = 0; i < d; ++i, rest /= 3) {
      z[i] = rest % 3 == 0 ? FeatureState::kPresent : rest % 3 == 1 ? FeatureState::kAbsent : FeatureState::kMatched;
      if (z[i] == FeatureState::kAbsent) y -= s.c[i];
      if (z[i] == FeatureState::kMatched) y += s.m[i];
    }
    rows.push_back({z, y, kernel_weight(z, dmax)});
  }
  std::vector<std::size_t> all(d);
  std::iota(all.begin(), all.end(), 0);
  auto beta = wls(rows, f_x, all, true).second;
  std::vector<double> w(d), p(d);
  for (std::size_t i = 0; i < d; ++i) {
    w[i] = -beta(static_cast<Eigen::Index>(2 * i));
    p[i] = beta(static_cast<Eigen::Index>(2 * i + 1));
  }
  return {w, p};
}

void surrogate_oracle() {
  auto t0 = Clock::now();
  double worst = 0.0;
  std::size_t step_checks = 0;
  std::vector<std::string> bad;
  std::uint64_t seed = 100;
  for (std::size_t d : {3u, 5u, 8u, 10u}) {
    for (int rep = 0; rep < 2; ++rep, ++seed) {
      // Additive: compare against the enumeration oracle.
      Synthetic s = make_synthetic(d, seed, 0.0);
      FunctionMatcher fm([&s](const RecordPair& q) { return synthetic_score(s, q); });
      auto space = build_space(s.pair, Side::kA, 1);
      Rng rng(seed);
      auto sample = sample_neighborhood(space, Mode::kLemon, fm, SamplingOptions{}, rng);
      const double f_x = score_one(fm, s.pair);
      auto fit = fit_surrogate(sample, d, f_x);
      auto [w, p] = enumeration_oracle(s);
      std::vector<double> gw(d, 0.0), gp(d, 0.0);
      for (const auto& a : attributions(fit)) {
        gw[a.feature] = a.w;
        gp[a.feature] = a.p;
      }
      for (std::size_t i = 0; i < d; ++i) {
        worst = std::max({worst, std::abs(gw[i] - w[i]), std::abs(gp[i] - p[i])});
      }

      // With an interaction the fit is inexact; every forward step must
      // still be the best single addition.
      Synthetic t = make_synthetic(d, seed + 1000, 0.05);
      FunctionMatcher tm([&t](const RecordPair& q) { return synthetic_score(t, q); });
      auto tspace = build_space(t.pair, Side::kA, 1);
      Rng trng(seed + 1000);
      auto tsample = sample_neighborhood(tspace, Mode::kLemon, tm, SamplingOptions{}, trng);
      const double tf = score_one(tm, t.pair);
      const std::size_t K = std::min<std::size_t>(d, 5);
      auto tfit = fit_surrogate(tsample, K, tf);
      std::vector<std::size_t> chosen;
      for (std::size_t step = 0; step < tfit.selected.size(); ++step) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < d; ++i) {
          if (std::find(chosen.begin(), chosen.end(), i) != chosen.end()) continue;
          auto trial = chosen;
          trial.push_back(i);
          best = std::min(best, wls(tsample.entries, tf, trial, true).first);
        }
        chosen.push_back(tfit.selected[step]);
        const double got = wls(tsample.entries, tf, chosen, true).first;
        ++step_checks;
        if (got > best + 1e-9 * std::max(1.0, best)) {
          bad.push_back("d=" + std::to_string(d) + " step " + std::to_string(step) + " not optimal");
        }
      }
      if (tfit.selected.size() != K) bad.push_back("d=" + std::to_string(d) + " selected fewer than K");
    }
  }
  const double t = seconds_since(t0);
  std::string detail = "max |fit - oracle| " + fmt(worst, 5) + " over d in {3,5,8,10}, " + std::to_string(step_checks) +
                       " forward steps checked, " + fmt(t, 2) + " s";
  for (const auto& b : bad) detail += "; " + b;
  verdict(worst <= 0.02 && bad.empty() && t < 10.0, "surrogate oracle (attributions within 0.02, step-optimal, < 10 s)",
          detail);
}

// ---------------------------------------------------------------------------
// CLI determinism

struct Run {
  int code = -1;
  std::string out;
};

Run cli(const std::string& args) {
  std::string cmd = std::string("'") + EMX_CLI_PATH + "' " + args + " 2>/dev/null";
  Run r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void determinism() {
  auto t0 = Clock::now();
  const fs::path dir = fs::temp_directory_path() / "emx_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string data = "'" + (dir / "beer").string() + "'";
  const std::string model = "'" + (dir / "beer.model").string() + "'";
  std::vector<std::string> bad;
  auto need = [&](const Run& r, const std::string& what) {
    if (r.code != 0) bad.push_back(what + " exited " + std::to_string(r.code));
  };
  need(cli("synth --name beer --out " + data), "synth");
  need(cli("train --dataset " + data + " --out " + model + " --seed 7"), "train");
  const std::string common = "--dataset " + data + " --matcher " + model + " --seed 11";
  std::size_t compared = 0;
  for (const char* id : {"0", "5", "17"}) {
    auto a = cli("explain " + common + " --pair-id " + id);
    auto b = cli("explain " + common + " --pair-id " + id);
    need(a, "explain");
    ++compared;
    if (a.out != b.out || a.out.empty()) bad.push_back(std::string("explain ") + id + " differs between runs");
  }
  for (const char* metric : {"cf1", "pe", "stability"}) {
    std::map<std::string, std::string> outputs;
    for (const char* w : {"1", "8", "8"}) {
      const fs::path out = dir / (std::string(metric) + "_w" + w + "_" + std::to_string(outputs.size()));
      auto r = cli("evaluate " + common + " --metric " + metric + " --class both --n 15 --workers " + w + " --out '" +
                   out.string() + "'");
      need(r, std::string("evaluate ") + metric);
      outputs[out.string()] = r.out + slurp(out / (std::string(metric) + ".json")) + slurp(out / (std::string(metric) + ".csv"));
    }
    ++compared;
    for (const auto& [k, v] : outputs) {
      if (v != outputs.begin()->second) bad.push_back(std::string("evaluate ") + metric + " output depends on workers");
    }
  }
  const double t = seconds_since(t0);
  std::string detail = std::to_string(compared) + " commands compared byte for byte, " + fmt(t, 1) + " s";
  for (const auto& b : bad) detail += "; " + b;
  verdict(bad.empty() && t < 120.0, "determinism (runs and --workers 1 vs 8 identical on beer, < 2 min)", detail);
  fs::remove_all(dir);
}

// ---------------------------------------------------------------------------
// desk-scale reproductions

struct ClassRun {
  std::vector<RecordPair> pairs;
  std::map<std::string, std::vector<DualExplanation>> duals;
};

struct DeskRun {
  std::string name;
  Dataset ds;
  std::unique_ptr<BaselineMatcher> matcher;
  std::map<Label, ClassRun> classes;
  double seconds = 0.0;
};

std::map<std::string, ExplainerSpec> variants() {
  std::map<std::string, ExplainerSpec> v;
  v["lemon"] = ExplainerSpec{};
  v["lime"].lime = true;
  v["no-ap"].config.disable_potential = true;
  v["no-de"].config.disable_dual = true;
  v["no-cfg"].config.fixed_granularity = 1;
  v["lemon-k3"].config.K = 3;
  return v;
}

constexpr std::uint64_t kSeed = 1;

DeskRun run_desk(const std::string& name) {
  auto t0 = Clock::now();
  DeskRun r;
  r.name = name;
  r.ds = desk::by_name(name);
  TrainConfig tc;
  tc.seed = 7;
  r.matcher = std::make_unique<BaselineMatcher>(train_baseline_matcher(r.ds, tc));
  for (Label cls : {Label::kMatch, Label::kNonMatch}) {
    ClassRun& c = r.classes[cls];
    c.pairs = select_pairs(r.ds, "test", *r.matcher, cls, 500, kSeed);
    for (const auto& [vname, spec] : variants()) {
      c.duals[vname] = explain_all(spec.explainer(), *r.matcher, c.pairs, kSeed, workers());
    }
  }
  r.seconds = seconds_since(t0);
  return r;
}

EvalOptions eval_options() {
  EvalOptions o;
  o.seed = kSeed;
  o.workers = workers();
  return o;
}

double cf1(const DeskRun& r, Label cls, const std::string& variant) {
  const ClassRun& c = r.classes.at(cls);
  return counterfactual_metrics(c.duals.at(variant), c.pairs, *r.matcher, eval_options()).CF1.value_or(0.0);
}

std::optional<double> pe(const DeskRun& r, const std::string& variant) {
  std::vector<DualExplanation> duals;
  std::vector<RecordPair> pairs;
  for (const auto& [cls, c] : r.classes) {
    duals.insert(duals.end(), c.duals.at(variant).begin(), c.duals.at(variant).end());
    pairs.insert(pairs.end(), c.pairs.begin(), c.pairs.end());
  }
  return perturbation_error(duals, pairs, *r.matcher, eval_options()).PE;
}

std::string counts(const DeskRun& r) {
  return std::to_string(r.classes.at(Label::kMatch).pairs.size()) + " match / " +
         std::to_string(r.classes.at(Label::kNonMatch).pairs.size()) + " non-match pairs";
}

void challenge(const std::vector<DeskRun>& runs) {
  bool ok = true;
  std::string detail;
  double total = 0.0;
  for (const auto& r : runs) {
    const double lemon_n = cf1(r, Label::kNonMatch, "lemon");
    const double lime_n = cf1(r, Label::kNonMatch, "lime");
    const double lemon_m = cf1(r, Label::kMatch, "lemon");
    const bool here = lemon_n - lime_n >= 0.25 && lemon_m >= 0.85;
    ok = ok && here;
    total += r.seconds;
    detail += r.name + ": non-match CF1 LEMON " + fmt(lemon_n) + " vs LIME " + fmt(lime_n) + " (gap " +
              fmt(lemon_n - lime_n) + "), match CF1 LEMON " + fmt(lemon_m) + (here ? "" : " [miss]") + "; ";
  }
  detail += "explanations took " + fmt(total, 0) + " s";
  verdict(ok && total <= 1800.0, "non-match gap (LEMON - LIME >= 0.25, LEMON match CF1 >= 0.85, <= 30 min)", detail);
}

void faithfulness(const std::vector<DeskRun>& runs) {
  bool ok = true;
  std::string detail;
  for (const auto& r : runs) {
    auto l = pe(r, "lemon");
    auto b = pe(r, "lime");
    const bool here = l && b && *l <= 0.75 && *l <= *b + 0.1;
    ok = ok && here;
    detail += r.name + ": PE LEMON " + (l ? fmt(*l) : "n/a") + ", LIME " + (b ? fmt(*b) : "n/a") + (here ? "" : " [miss]") +
              "; ";
  }
  detail.resize(detail.size() - 2);
  verdict(ok, "faithfulness (LEMON PE <= 0.75 and <= LIME PE + 0.1)", detail);
}

bool differs(const std::vector<DualExplanation>& a, const std::vector<DualExplanation>& b) {
  if (a.size() != b.size()) return true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (to_json(a[i]).dump() != to_json(b[i]).dump()) return true;
  }
  return false;
}

void ablations(const std::vector<DeskRun>& runs) {
  bool ok = true;
  std::string detail;
  for (const auto& r : runs) {
    const double full = cf1(r, Label::kNonMatch, "lemon");
    const double no_ap = cf1(r, Label::kNonMatch, "no-ap");
    const double no_de = cf1(r, Label::kNonMatch, "no-de");
    const double no_cfg = cf1(r, Label::kNonMatch, "no-cfg");
    bool de_distinct = false, cfg_distinct = false;
    for (const auto& [cls, c] : r.classes) {
      de_distinct = de_distinct || differs(c.duals.at("no-de"), c.duals.at("lemon"));
      cfg_distinct = cfg_distinct || differs(c.duals.at("no-cfg"), c.duals.at("lemon"));
    }
    const bool here = full - no_ap >= 0.2 && de_distinct && cfg_distinct;
    ok = ok && here;
    detail += r.name + ": non-match CF1 full " + fmt(full) + ", w/o AP " + fmt(no_ap) + " (drop " + fmt(full - no_ap) +
              "), w/o DE " + fmt(no_de) + (de_distinct ? " distinct" : " IDENTICAL") + ", w/o CFG " + fmt(no_cfg) +
              (cfg_distinct ? " distinct" : " IDENTICAL") + (here ? "" : " [miss]") + "; ";
  }
  detail.resize(detail.size() - 2);
  verdict(ok, "ablations (w/o AP drops non-match CF1 by >= 0.2; w/o DE, w/o CFG distinct)", detail);
}

std::vector<RecordPair> all_pairs(const DeskRun& r) {
  std::vector<RecordPair> out;
  for (const auto& [cls, c] : r.classes) out.insert(out.end(), c.pairs.begin(), c.pairs.end());
  return out;
}

void stability_trend(const std::vector<DeskRun>& runs) {
  auto t0 = Clock::now();
  const DeskRun& beer = runs.front();
  const auto pairs = all_pairs(beer);
  auto at = [&](std::optional<std::size_t> size, const DeskRun& r, const std::vector<RecordPair>& ps) {
    ExplainerSpec s;
    s.config.sample_size = size;
    return stability(s.explainer(), *r.matcher, ps, {1, 2}, workers()).mean.value_or(0.0);
  };
  const double small = at(50, beer, pairs);
  const double large = at(2000, beer, pairs);
  bool ok = large > small;
  std::string detail = "beer (" + std::to_string(pairs.size()) + " pairs): |Z|=50 " + fmt(small) + ", |Z|=2000 " +
                       fmt(large) + "; defaults";
  for (const auto& r : runs) {
    const double def = at(std::nullopt, r, all_pairs(r));
    ok = ok && def >= 0.5;
    detail += " " + r.name + " " + fmt(def);
  }
  const double t = seconds_since(t0);
  detail += "; " + fmt(t, 0) + " s";
  verdict(ok && t <= 1200.0, "stability trend (|Z|=2000 above |Z|=50 on beer, defaults >= 0.5, <= 20 min)", detail);
}

void k_plateau(const std::vector<DeskRun>& runs) {
  bool ok = true;
  std::string detail;
  for (const auto& r : runs) {
    detail += r.name + ":";
    for (Label cls : {Label::kMatch, Label::kNonMatch}) {
      const double k3 = cf1(r, cls, "lemon-k3");
      const double k5 = cf1(r, cls, "lemon");
      ok = ok && std::abs(k3 - k5) <= 0.1;
      detail += std::string(cls == Label::kMatch ? " match" : " non-match") + " CF1 K=3 " + fmt(k3) + " vs K=5 " + fmt(k5);
    }
    detail += "; ";
  }
  detail.resize(detail.size() - 2);
  verdict(ok, "K plateau (|CF1(K=3) - CF1(K=5)| <= 0.1 per class)", detail);
}

}  // namespace

int main() {
  try {
    formula_suite();
    surrogate_oracle();
    determinism();
    std::vector<DeskRun> runs;
    for (const char* name : {"beer", "restaurants"}) {
      runs.push_back(run_desk(name));
      std::cout << "  " << name << ": " << counts(runs.back()) << ", " << fmt(runs.back().seconds, 0) << " s" << std::endl;
    }
    challenge(runs);
    faithfulness(runs);
    ablations(runs);
    stability_trend(runs);
    k_plateau(runs);
  } catch (const std::exception& e) {
    std::cout << "FAIL acceptance aborted: " << e.what() << std::endl;
    return 1;
  }
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed")) << std::endl;
  return failures ? 1 : 0;
}
