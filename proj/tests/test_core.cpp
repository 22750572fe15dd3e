#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "emx/emx.hpp"

namespace fs = std::filesystem;
using namespace emx;

namespace {

AttributeValue T(const std::string& s) { return AttributeValue::text(s); }
AttributeValue N(double d) { return AttributeValue::number(d); }

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("emx_core_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

/// A tiny dataset in the benchmark layout.
fs::path tiny_dataset(const std::string& name) {
  auto dir = temp_dir(name);
  write(dir / "tableA.csv", "id,title,price\n1,apple iphone 12,799\n2,galaxy s21,\n3,\"pixel, 5\",699.5\n");
  write(dir / "tableB.csv", "id,title,price\n10,iphone 12 apple,799\n11,galaxy s21 ultra,1199\n");
  write(dir / "train.csv", "ltable_id,rtable_id,label\n1,10,1\n2,11,0\n3,10,0\n");
  write(dir / "valid.csv", "ltable_id,rtable_id,label\n1,10,1.0\n");
  write(dir / "test.csv", "ltable_id,rtable_id,label\n2,11,0\n3,11,0.0\n");
  return dir;
}

}  // namespace

// ---------------------------------------------------------------------------
// records and tokens

TEST(Tokenize, SplitsOnWhitespaceRuns) {
  EXPECT_EQ(tokenize(T("belkin shield micra for ipod touch tint")).size(), 7u);
  EXPECT_EQ(tokenize(T("  a \t b\n c  ")), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_TRUE(tokenize(T("")).empty());
  EXPECT_TRUE(tokenize(T("   ")).empty());
}

TEST(Tokenize, NumbersAreOneTokenAndNullIsNone) {
  EXPECT_EQ(tokenize(N(47.88)), (std::vector<std::string>{"47.88"}));
  EXPECT_EQ(tokenize(N(799)), (std::vector<std::string>{"799"}));
  EXPECT_TRUE(tokenize(AttributeValue::null()).empty());
}

TEST(Tokenize, IdempotentOnTokens) {
  for (const auto& t : tokenize(T("sony  bravia-55 4k, tv"))) {
    EXPECT_EQ(tokenize(T(t)), std::vector<std::string>{t});
  }
}

TEST(Tokenize, RecordTokensCarryLocations) {
  Record r({{"brand name", T("belkin")}, {"price", N(9.5)}, {"note", AttributeValue::null()}});
  auto values = tokenize_record(r);
  ASSERT_EQ(values.size(), 2u);
  EXPECT_EQ(values[1].text, "9.5");
  EXPECT_EQ(values[1].attribute_index, 1u);
  auto with_names = tokenize_record(r, true);
  EXPECT_EQ(with_names.size(), 2u + 4u);
}

TEST(Number, FormatAndParse) {
  EXPECT_EQ(format_number(47.88), "47.88");
  EXPECT_EQ(format_number(1e21), "1e+21");
  EXPECT_EQ(parse_number("699.5"), 699.5);
  EXPECT_EQ(parse_number("+3"), 3.0);
  EXPECT_FALSE(parse_number("12abc"));
  EXPECT_FALSE(parse_number(""));
  EXPECT_FALSE(parse_number("nan"));
}

TEST(Record, RejectsDuplicateNames) {
  EXPECT_THROW(Record({{"a", T("x")}, {"a", T("y")}}), ValidationError);
  Record r({{"a", T("x")}, {"b", N(1)}});
  EXPECT_EQ(r.find("b"), 1u);
  EXPECT_FALSE(r.find("c"));
}

TEST(Truncate, KeepsShortRecordsUnchanged) {
  Record r({{"title", T("ten words are here in this short record ok now")}, {"price", N(3)}});
  EXPECT_EQ(truncate_record(r, 256), r);
}

TEST(Truncate, CutsLongValue) {
  std::string text;
  for (int i = 0; i < 300; ++i) text += "w" + std::to_string(i) + " ";
  Record r({{"description", T(text)}});
  auto t = truncate_record(r, 256);
  EXPECT_EQ(tokenize(t[0].value).size(), 256u);
  EXPECT_EQ(tokenize(t[0].value).back(), "w255");
}

TEST(Truncate, GreedyInAttributeOrder) {
  std::string a, b;
  for (int i = 0; i < 200; ++i) {
    a += "a" + std::to_string(i) + " ";
    b += "b" + std::to_string(i) + " ";
  }
  Record r({{"x", T(a)}, {"n", N(5)}, {"y", T(b)}});
  auto t = truncate_record(r, 256);
  EXPECT_EQ(tokenize(t[0].value).size(), 200u);
  EXPECT_EQ(t[1].value, N(5));
  EXPECT_EQ(tokenize(t[2].value).size(), 56u);
  EXPECT_THROW(truncate_record(r, 0), ConfigError);
}

TEST(Truncate, NeverGrowsOrReorders) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Attribute> attrs;
    for (int k = 0; k < 4; ++k) {
      std::string s;
      for (std::size_t w = 0, n = rng.index(12); w < n; ++w) s += "t" + std::to_string(w) + (rng.coin() ? "  " : " ");
      attrs.push_back({"c" + std::to_string(k), T(s)});
    }
    Record r(attrs);
    auto t = truncate_record(r, 1 + rng.index(20));
    ASSERT_EQ(t.size(), r.size());
    for (std::size_t k = 0; k < r.size(); ++k) {
      EXPECT_EQ(t[k].name, r[k].name);
      EXPECT_LE(tokenize(t[k].value).size(), tokenize(r[k].value).size());
    }
  }
}

// ---------------------------------------------------------------------------
// CSV and datasets

TEST(Csv, QuotedFieldsAndMissingCells) {
  auto rows = csv::parse("a,b,c\r\n\"x, y\",,\"\"\n\"multi\nline\",\"q\"\"uote\",3");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1][0].text, "x, y");
  EXPECT_TRUE(rows[1][1].missing);
  EXPECT_FALSE(rows[1][2].missing);
  EXPECT_EQ(rows[1][2].text, "");
  EXPECT_EQ(rows[2][0].text, "multi\nline");
  EXPECT_EQ(rows[2][1].text, "q\"uote");
  EXPECT_THROW(csv::parse("a,\"open"), Error);
}

TEST(Csv, WriteThenParseRoundTrips) {
  csv::Row row{{"plain", false}, {"with,comma", false}, {"", true}, {"", false}, {"say \"hi\"", false}};
  std::ostringstream out;
  csv::write_row(out, row);
  auto back = csv::parse(out.str());
  ASSERT_EQ(back.size(), 1u);
  ASSERT_EQ(back[0].size(), row.size());
  for (std::size_t i = 0; i < row.size(); ++i) {
    EXPECT_EQ(back[0][i].text, row[i].text);
    EXPECT_EQ(back[0][i].missing, row[i].missing);
  }
}

TEST(Dataset, LoadsTablesAndSplits) {
  auto ds = load_benchmark_dataset(tiny_dataset("load"));
  EXPECT_EQ(ds.candidate_count(), 6u);
  EXPECT_EQ(ds.match_count(), 2u);
  EXPECT_TRUE(ds.table_a[0][1].value.is_number());
  EXPECT_TRUE(ds.table_a[1][1].value.is_null());
  EXPECT_EQ(ds.table_a[2][0].value, T("pixel, 5"));
  auto p = ds.pair("test", 1);
  EXPECT_EQ(p.pair_id, "test-1");
  EXPECT_EQ(p.a[0].value, T("pixel, 5"));
  EXPECT_EQ(p.b[1].value, N(1199));
}

TEST(Dataset, MissingFileNamesIt) {
  auto dir = tiny_dataset("missing");
  fs::remove(dir / "tableB.csv");
  try {
    load_benchmark_dataset(dir);
    FAIL() << "expected a load error";
  } catch (const LoadError& e) {
    EXPECT_NE(std::string(e.what()).find("tableB.csv"), std::string::npos);
  }
}

TEST(Dataset, DanglingIdsAreListed) {
  auto dir = tiny_dataset("dangling");
  write(dir / "test.csv", "ltable_id,rtable_id,label\n2,11,0\n9,11,0\n2,77,1\n");
  try {
    load_benchmark_dataset(dir);
    FAIL() << "expected a validation error";
  } catch (const ValidationError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("9"), std::string::npos);
    EXPECT_NE(msg.find("77"), std::string::npos);
  }
}

TEST(Dataset, MixedColumnStaysText) {
  auto dir = tiny_dataset("mixed");
  write(dir / "tableB.csv", "id,title,price\n10,iphone 12 apple,799\n11,galaxy s21 ultra,n/a\n");
  auto ds = load_benchmark_dataset(dir);
  EXPECT_EQ(ds.table_b[0][1].value, T("799"));
}

TEST(Dataset, SaveLoadRoundTrip) {
  auto ds = load_benchmark_dataset(tiny_dataset("rt"));
  auto out = temp_dir("rt_out");
  save_benchmark_dataset(ds, out);
  auto back = load_benchmark_dataset(out);
  EXPECT_EQ(back, ds);
  EXPECT_EQ(dataset_fingerprint(back), dataset_fingerprint(ds));
}

TEST(Dataset, TruncationOnLoad) {
  LoadOptions o;
  o.max_words = 2;
  auto ds = load_benchmark_dataset(tiny_dataset("trunc"), o);
  EXPECT_EQ(ds.table_a[0][0].value, T("apple iphone"));
}

TEST(Json, RecordPairRoundTripKeepsTypes) {
  RecordPair p{Record({{"title", T("")}, {"price", N(47.88)}, {"note", AttributeValue::null()}}),
               Record({{"title", T("x  y")}}), "p-1"};
  auto j = to_json(p);
  EXPECT_TRUE(j["a"]["attributes"][2]["value"].is_null());
  EXPECT_TRUE(j["a"]["attributes"][1]["value"].is_number());
  EXPECT_EQ(pair_from_json(json::parse(j.dump())), p);
}

// ---------------------------------------------------------------------------
// rng

TEST(Rng, DerivedSeedsAreStableAndDistinct) {
  EXPECT_EQ(derive_seed(1, "p-1", "a", 2), derive_seed(1, "p-1", "a", 2));
  std::set<std::uint64_t> seen;
  for (int s = 0; s < 3; ++s) {
    for (const char* side : {"a", "b"}) {
      for (int n : {1, 2, 4}) seen.insert(derive_seed(s, "p-1", side, n));
    }
  }
  EXPECT_EQ(seen.size(), 18u);
}

TEST(Rng, ChooseGivesDistinctItems) {
  Rng rng(5);
  std::vector<std::size_t> pool{0, 1, 2, 3, 4, 5, 6, 7};
  auto c = rng.choose(pool, 5);
  EXPECT_EQ(std::set<std::size_t>(c.begin(), c.end()).size(), 5u);
  EXPECT_TRUE(rng.choose(pool, 0).empty());
}

// ---------------------------------------------------------------------------
// similarity features and matchers

TEST(Similarity, IdentityAndEditDistance) {
  EXPECT_DOUBLE_EQ(jaccard({"belkin"}, {"belkin"}), 1.0);
  EXPECT_DOUBLE_EQ(jaccard({"f8z646ttc01"}, {"f8z646ttc02"}), 0.0);
  EXPECT_EQ(levenshtein("f8z646ttc01", "f8z646ttc02"), 1u);
  EXPECT_NEAR(levenshtein_similarity("f8z646ttc01", "f8z646ttc02"), 10.0 / 11.0, 1e-12);
  EXPECT_DOUBLE_EQ(levenshtein_similarity("same", "same"), 1.0);
}

TEST(Similarity, FeatureLayout) {
  RecordPair p{Record({{"brand", T("Belkin")}, {"price", N(10)}, {"color", AttributeValue::null()}}),
               Record({{"brand", T("belkin")}, {"price", N(8)}, {"color", AttributeValue::null()}}), "x"};
  auto f = similarity_features(p);
  ASSERT_EQ(f.size(), 3 * kFeaturesPerAttribute + 1);
  EXPECT_DOUBLE_EQ(f[0], 1.0);
  EXPECT_DOUBLE_EQ(f[1], 1.0);
  EXPECT_DOUBLE_EQ(f[3], 0.0);
  EXPECT_NEAR(f[6], 0.2, 1e-12);
  EXPECT_DOUBLE_EQ(f[8], 0.0);
  EXPECT_DOUBLE_EQ(f[11], 1.0);
}

TEST(Matcher, ChunkingAndValidation) {
  FunctionMatcher m([](const RecordPair& p) { return p.a.size() == p.b.size() ? 0.9 : 0.1; });
  std::vector<RecordPair> pairs;
  for (int i = 0; i < 7; ++i) {
    std::vector<Attribute> b{{"x", T("1")}};
    if (i % 2) b.push_back({"y", T("2")});
    pairs.push_back({Record({{"x", T("1")}}), Record(b), std::to_string(i)});
  }
  auto all = predict_chunked(m, pairs, 3);
  ASSERT_EQ(all.size(), 7u);
  auto head = predict_chunked(m, std::span<const RecordPair>(pairs).first(4), 64);
  auto tail = predict_chunked(m, std::span<const RecordPair>(pairs).subspan(4), 64);
  head.insert(head.end(), tail.begin(), tail.end());
  EXPECT_EQ(head, all);

  FunctionMatcher bad([](const RecordPair&) { return 1.5; });
  EXPECT_THROW(score_one(bad, pairs[0]), MatcherError);
  FunctionMatcher nan([](const RecordPair&) { return std::nan(""); });
  EXPECT_THROW(score_one(nan, pairs[0]), MatcherError);
  EXPECT_FALSE(predicts_match(0.5, 0.5));
}

TEST(Baseline, TrainsOnDeskDatasets) {
  for (const char* name : {"beer", "restaurants"}) {
    auto ds = desk::by_name(name);
    TrainConfig cfg;
    cfg.seed = 7;
    auto model = train_baseline_matcher(ds, cfg);
    ASSERT_TRUE(model.validation_f1);
    EXPECT_GE(*model.validation_f1, std::string(name) == "beer" ? 0.6 : 0.85) << name;
    BaselineMatcher m(model);
    // Identical records score above the threshold.
    for (std::size_t i = 0; i < 5; ++i) {
      RecordPair same{ds.table_a[i], ds.table_a[i], "same"};
      EXPECT_GT(score_one(m, same), m.threshold());
    }
  }
}

TEST(Baseline, DeterministicAndSerializable) {
  auto ds = desk::beer();
  TrainConfig cfg;
  cfg.seed = 3;
  cfg.epochs = 200;
  auto m1 = train_baseline_matcher(ds, cfg);
  auto m2 = train_baseline_matcher(ds, cfg);
  EXPECT_EQ(to_json(m1).dump(), to_json(m2).dump());
  auto dir = temp_dir("model");
  save_baseline_model(m1, (dir / "m.json").string());
  auto back = load_baseline_model((dir / "m.json").string());
  EXPECT_EQ(to_json(back).dump(), to_json(m1).dump());
  BaselineMatcher a(m1), b(back);
  auto p = ds.pair("test", 0);
  EXPECT_EQ(score_one(a, p), score_one(b, p));
}

TEST(Baseline, ScoresStayInRangeOnOddRecords) {
  auto ds = desk::restaurants();
  TrainConfig cfg;
  cfg.seed = 1;
  cfg.epochs = 300;
  BaselineMatcher m(train_baseline_matcher(ds, cfg));
  Rng rng(11);
  std::vector<RecordPair> pairs;
  for (int i = 0; i < 200; ++i) {
    std::vector<Attribute> a, b;
    for (const char* n : {"name", "addr", "phone", "zzz"}) {
      auto pick = [&]() -> AttributeValue {
        switch (rng.index(4)) {
          case 0: return AttributeValue::null();
          case 1: return N(static_cast<double>(rng.index(1000)) - 500.0);
          case 2: return T("");
          default: return T("tok" + std::to_string(rng.index(5)) + " x");
        }
      };
      if (rng.coin(0.8)) a.push_back({n, pick()});
      if (rng.coin(0.8)) b.push_back({n, pick()});
    }
    pairs.push_back({Record(a), Record(b), std::to_string(i)});
  }
  auto s = predict_chunked(m, pairs, 16);
  for (double v : s) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Baseline, RejectsSingleClassTraining) {
  auto ds = desk::beer();
  std::vector<LabeledPair> only_neg;
  for (const auto& lp : ds.splits["train"]) {
    if (lp.label == Label::kNonMatch) only_neg.push_back(lp);
  }
  ds.splits["train"] = only_neg;
  EXPECT_THROW(train_baseline_matcher(ds, {}), ConfigError);
  ds.splits["train"].clear();
  EXPECT_THROW(train_baseline_matcher(ds, {}), ConfigError);
}

TEST(Desk, ShapesAndDeterminism) {
  auto beer = desk::beer();
  EXPECT_EQ(beer.candidate_count(), 450u);
  EXPECT_EQ(beer.match_count(), 68u);
  auto rest = desk::restaurants();
  EXPECT_EQ(rest.candidate_count(), 946u);
  EXPECT_EQ(rest.match_count(), 110u);
  EXPECT_EQ(dataset_fingerprint(desk::beer()), dataset_fingerprint(beer));
  EXPECT_NE(dataset_fingerprint(desk::beer(99)), dataset_fingerprint(beer));
  EXPECT_THROW(desk::by_name("walmart"), ConfigError);
}
