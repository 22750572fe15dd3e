#pragma once

// Small deterministic datasets in the benchmark layout, for running the
// evaluation harness offline. Records of table B are noisy rewrites of
// table A entities; non-match candidates mix hard negatives (shared
// brewery, city or cuisine) with random pairs.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "emx/dataset.hpp"
#include "emx/error.hpp"
#include "emx/record.hpp"
#include "emx/rng.hpp"
#include "emx/tokenize.hpp"

namespace emx::desk {

struct DeskSpec {
  std::size_t entities = 0;
  std::size_t extra_b = 0;
  std::size_t matches = 0;
  std::size_t candidates = 0;
};

namespace detail {

template <std::size_t N>
const char* pick(Rng& rng, const char* const (&pool)[N]) {
  return pool[rng.index(N)];
}

inline std::string lowercase(const std::string& s) {
  std::string out;
  for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

inline std::string replace_word(const std::string& s, const std::string& from, const std::string& to) {
  auto words = split_whitespace(s);
  for (auto& w : words) {
    if (w == from) w = to;
  }
  return join_tokens(words);
}

inline std::string drop_word(const std::string& s, Rng& rng) {
  auto words = split_whitespace(s);
  if (words.size() < 3) return s;
  words.erase(words.begin() + static_cast<std::ptrdiff_t>(1 + rng.index(words.size() - 1)));
  return join_tokens(words);
}

inline std::string typo(const std::string& s, Rng& rng) {
  if (s.size() < 5) return s;
  std::string out = s;
  std::size_t i = 1 + rng.index(out.size() - 2);
  if (out[i] == ' ' || out[i + 1] == ' ') return s;
  std::swap(out[i], out[i + 1]);
  return out;
}

/// Assembles candidates: every entity with a B rewrite contributes one
/// match, the rest are non-matches drawn by `negative`. Splits are 3:1:1.
template <typename Negative>
Dataset assemble(std::vector<Record> a, std::vector<Record> b, const std::vector<std::pair<std::size_t, std::size_t>>& matches,
                 std::size_t candidates, Negative&& negative, Rng& rng) {
  std::set<std::pair<std::size_t, std::size_t>> seen(matches.begin(), matches.end());
  std::vector<LabeledPair> all;
  for (auto [i, j] : matches) all.push_back({i, j, Label::kMatch});
  std::size_t guard = 0;
  while (all.size() < candidates) {
    if (++guard > candidates * 100) throw ConfigError("desk dataset: cannot draw enough non-matches");
    auto [i, j] = negative(rng);
    if (!seen.insert({i, j}).second) continue;
    all.push_back({i, j, Label::kNonMatch});
  }
  for (std::size_t k = all.size(); k > 1; --k) std::swap(all[k - 1], all[rng.index(k)]);

  Dataset ds;
  ds.table_a = std::move(a);
  ds.table_b = std::move(b);
  for (std::size_t i = 0; i < ds.table_a.size(); ++i) ds.ids_a.push_back(std::to_string(i));
  for (std::size_t i = 0; i < ds.table_b.size(); ++i) ds.ids_b.push_back(std::to_string(i));
  const std::size_t n_train = all.size() * 3 / 5;
  const std::size_t n_valid = all.size() / 5;
  ds.splits["train"].assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n_train));
  ds.splits["valid"].assign(all.begin() + static_cast<std::ptrdiff_t>(n_train),
                            all.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid));
  ds.splits["test"].assign(all.begin() + static_cast<std::ptrdiff_t>(n_train + n_valid), all.end());
  return ds;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Beer: Beer_Name, Brew_Factory_Name, Style, ABV

inline DeskSpec beer_spec() { return {140, 60, 68, 450}; }

inline Dataset beer(std::uint64_t seed = 2024) {
  static const char* const kAdjective[] = {"Hoppy",  "Dark",   "Golden", "Old",     "Wild",   "Big",    "Lazy",
                                           "Rusty",  "Hazy",   "Double", "Smoked",  "Bitter", "Crooked", "Black",
                                           "Red",    "Little", "Lost",   "Midnight", "Iron",  "Copper"};
  static const char* const kNoun[] = {"Dog",    "River",  "Monk",  "Owl",    "Anchor", "Harvest", "Mountain",
                                      "Fox",    "Hammer", "Ghost", "Sun",    "Barrel", "Trail",   "Bear",
                                      "Lantern", "Raven", "Tide",  "Canyon", "Pine",   "Wolf"};
  static const char* const kStyle[] = {"American IPA",    "Imperial Stout",      "Porter",     "Pale Ale",
                                       "Hefeweizen",      "Saison",              "Pilsner",    "Amber Ale",
                                       "Belgian Tripel",  "Barleywine",          "Brown Ale",  "Kolsch",
                                       "Oatmeal Stout",   "Double IPA",          "Witbier",    "Scotch Ale"};
  static const char* const kBrewery[] = {"Stone",   "Bell's",   "Founders", "Deschutes", "Lagunitas", "Oskar Blues",
                                         "Avery",   "Firestone", "Rogue",   "Victory",   "Ballast Point", "Bear Republic",
                                         "Odell",   "Sierra Nevada", "Dogfish Head", "New Holland", "Great Lakes",
                                         "Three Floyds", "Alesmith", "Half Acre"};
  static const char* const kBrewSuffix[] = {"Brewing Company", "Brewery", "Brewing Co.", "Beer Company"};

  const DeskSpec spec = beer_spec();
  Rng rng(derive_seed(seed, "beer"));
  struct Beer {
    std::string name, brewery, suffix, style;
    double abv;
  };
  std::vector<Beer> ents;
  std::set<std::string> names;
  while (ents.size() < spec.entities) {
    Beer e;
    e.brewery = detail::pick(rng, kBrewery);
    e.suffix = detail::pick(rng, kBrewSuffix);
    e.style = detail::pick(rng, kStyle);
    e.name = std::string(detail::pick(rng, kAdjective)) + " " + detail::pick(rng, kNoun);
    if (rng.coin(0.4)) e.name += " " + split_whitespace(e.style).back();
    if (!names.insert(e.brewery + e.name).second) continue;
    e.abv = std::round((4.0 + rng.uniform01() * 8.0) * 10.0) / 10.0;
    ents.push_back(e);
  }

  auto record_a = [](const Beer& e) {
    return Record({{"Beer_Name", AttributeValue::text(e.name)},
                   {"Brew_Factory_Name", AttributeValue::text(e.brewery + " " + e.suffix)},
                   {"Style", AttributeValue::text(e.style)},
                   {"ABV", AttributeValue::number(e.abv)}});
  };
  auto record_b = [&rng](const Beer& e) {
    std::string name = e.name;
    if (rng.coin(0.5)) name = e.brewery + " " + name;
    if (rng.coin(0.2)) name = detail::typo(name, rng);
    if (rng.coin(0.15)) name = detail::lowercase(name);
    std::string brewery = e.brewery;
    if (rng.coin(0.5)) brewery += rng.coin(0.5) ? " Brewing" : " " + e.suffix;
    std::string style = e.style;
    style = detail::replace_word(style, "IPA", rng.coin(0.5) ? "India Pale Ale (IPA)" : "IPA");
    if (rng.coin(0.3)) style = detail::replace_word(style, "Imperial", "Russian Imperial");
    AttributeValue abv = rng.coin(0.15) ? AttributeValue::null() : AttributeValue::number(e.abv);
    return Record({{"Beer_Name", AttributeValue::text(name)},
                   {"Brew_Factory_Name", AttributeValue::text(brewery)},
                   {"Style", AttributeValue::text(style)},
                   {"ABV", abv}});
  };

  std::vector<Record> a, b;
  for (const auto& e : ents) a.push_back(record_a(e));
  std::vector<std::pair<std::size_t, std::size_t>> matches;
  std::vector<std::size_t> order(ents.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  order = rng.choose(order, spec.matches);
  for (std::size_t i : order) {
    matches.push_back({i, b.size()});
    b.push_back(record_b(ents[i]));
  }
  // Unmatched B records: rewrites of fresh beers from known breweries.
  std::vector<std::size_t> b_entity(b.size());
  for (std::size_t k = 0; k < order.size(); ++k) b_entity[k] = order[k];
  while (b.size() < spec.matches + spec.extra_b) {
    Beer e = ents[rng.index(ents.size())];
    e.name = std::string(detail::pick(rng, kAdjective)) + " " + detail::pick(rng, kNoun);
    e.style = detail::pick(rng, kStyle);
    e.abv = std::round((4.0 + rng.uniform01() * 8.0) * 10.0) / 10.0;
    if (names.count(e.brewery + e.name)) continue;
    b.push_back(record_b(e));
    b_entity.push_back(ents.size());
  }
  const auto ents_ref = ents;
  auto negative = [&](Rng& r) -> std::pair<std::size_t, std::size_t> {
    std::size_t j = r.index(b.size());
    if (r.coin(0.6)) {
      // Hard negative: an A beer from the same brewery as B record j.
      const std::string brewery_b = b[j][1].value.as_text();
      std::vector<std::size_t> same;
      for (std::size_t i = 0; i < ents_ref.size(); ++i) {
        if (i != b_entity[j] && brewery_b.rfind(ents_ref[i].brewery, 0) == 0) same.push_back(i);
      }
      if (!same.empty()) return {same[r.index(same.size())], j};
    }
    std::size_t i = r.index(a.size());
    if (i == b_entity[j]) i = (i + 1) % a.size();
    return {i, j};
  };
  return detail::assemble(a, b, matches, spec.candidates, negative, rng);
}

// ---------------------------------------------------------------------------
// Restaurants: name, addr, city, phone, type, class

inline DeskSpec restaurants_spec() { return {300, 90, 110, 946}; }

inline Dataset restaurants(std::uint64_t seed = 2024) {
  static const char* const kNameA[] = {"Golden", "Blue",   "Little", "Grand",  "Old",   "Silver", "Green",
                                       "Royal",  "Lucky",  "Red",    "Happy",  "Casa",  "Chez",   "Cafe",
                                       "Bella",  "Union",  "Harbor", "Corner", "Garden", "Rose"};
  static const char* const kNameB[] = {"Dragon", "Lantern", "Bistro", "Grill",  "Kitchen", "Table", "Tavern",
                                       "Palace", "House",   "Oyster", "Garden", "Spoon",   "Fork",  "Diner",
                                       "Trattoria", "Cantina", "Brasserie", "Steakhouse", "Noodle", "Plate"};
  static const char* const kStreet[] = {"Sunset",  "Melrose", "Main",    "Broadway", "Market", "Mission",
                                        "Wilshire", "Lexington", "Madison", "Columbus", "Peachtree", "Valencia",
                                        "Fairfax", "Hudson",  "Spring",  "Ocean"};
  static const char* const kStreetType[] = {"Blvd.", "Ave.", "St.", "Rd."};
  static const char* const kCity[] = {"los angeles", "new york", "san francisco", "atlanta", "las vegas",
                                      "santa monica", "beverly hills", "brooklyn"};
  static const char* const kArea[] = {"213", "212", "415", "404", "702", "310", "310", "718"};
  static const char* const kType[] = {"american", "italian", "french", "chinese", "japanese", "mexican",
                                      "steakhouses", "seafood", "californian", "delis", "cafeterias", "asian"};

  const DeskSpec spec = restaurants_spec();
  Rng rng(derive_seed(seed, "restaurants"));
  struct Place {
    std::string name, number, street, street_type, phone, type;
    std::size_t city;
  };
  std::vector<Place> ents;
  std::set<std::string> names;
  auto fresh_place = [&](Rng& r) {
    Place p;
    p.name = std::string(detail::pick(r, kNameA)) + " " + detail::pick(r, kNameB);
    if (r.coin(0.3)) p.name += " " + std::string(detail::pick(r, kNameB));
    p.number = std::to_string(100 + r.index(9800));
    p.street = detail::pick(r, kStreet);
    p.street_type = detail::pick(r, kStreetType);
    p.city = r.index(std::size(kCity));
    p.phone = std::to_string(100 + r.index(900)) + "-" + std::to_string(1000 + r.index(9000));
    p.type = detail::pick(r, kType);
    return p;
  };
  while (ents.size() < spec.entities) {
    Place p = fresh_place(rng);
    if (!names.insert(p.name + kCity[p.city]).second) continue;
    ents.push_back(p);
  }
  auto record_a = [&](const Place& p) {
    return Record({{"name", AttributeValue::text(p.name)},
                   {"addr", AttributeValue::text(p.number + " " + p.street + " " + p.street_type)},
                   {"city", AttributeValue::text(kCity[p.city])},
                   {"phone", AttributeValue::text(std::string(kArea[p.city]) + "/" + p.phone)},
                   {"type", AttributeValue::text(p.type)},
                   {"class", AttributeValue::number(static_cast<double>(rng.index(900)))}});
  };
  auto record_b = [&](const Place& p) {
    std::string name = p.name;
    if (rng.coin(0.2)) name = detail::typo(name, rng);
    if (rng.coin(0.2)) name = detail::drop_word(name, rng);
    std::string street_type = p.street_type;
    if (rng.coin(0.5)) {
      street_type = street_type == "Blvd." ? "Boulevard" : street_type == "Ave." ? "Avenue"
                    : street_type == "St." ? "Street" : "Road";
    }
    std::string city = kCity[p.city];
    if (rng.coin(0.2)) city = p.city == 0 ? "hollywood" : city == "new york" ? "new york city" : city;
    std::string type = p.type;
    if (rng.coin(0.3)) type = type + " (new)";
    return Record({{"name", AttributeValue::text(name)},
                   {"addr", AttributeValue::text(p.number + " " + p.street + " " + street_type)},
                   {"city", AttributeValue::text(city)},
                   {"phone", AttributeValue::text(std::string(kArea[p.city]) + "-" + p.phone)},
                   {"type", AttributeValue::text(type)},
                   {"class", AttributeValue::number(static_cast<double>(rng.index(900)))}});
  };

  std::vector<Record> a, b;
  for (const auto& p : ents) a.push_back(record_a(p));
  std::vector<std::size_t> order(ents.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  order = rng.choose(order, spec.matches);
  std::vector<std::pair<std::size_t, std::size_t>> matches;
  std::vector<std::size_t> b_entity;
  for (std::size_t i : order) {
    matches.push_back({i, b.size()});
    b_entity.push_back(i);
    b.push_back(record_b(ents[i]));
  }
  while (b.size() < spec.matches + spec.extra_b) {
    Place p = fresh_place(rng);
    if (names.count(p.name + kCity[p.city])) continue;
    // Unmatched places share a city and cuisine with some A record.
    const Place& near = ents[rng.index(ents.size())];
    p.city = near.city;
    p.type = near.type;
    b.push_back(record_b(p));
    b_entity.push_back(ents.size());
  }
  // Blocking-style negatives: records sharing a name word or street name.
  auto shares_key = [&](std::size_t i, std::size_t j) {
    auto words = [](const Record& r) {
      auto w = split_whitespace(detail::lowercase(r[0].value.as_text()));
      auto addr = split_whitespace(r[1].value.as_text());
      if (addr.size() > 1) w.push_back(detail::lowercase(addr[1]));
      return std::set<std::string>(w.begin(), w.end());
    };
    auto wa = words(a[i]);
    for (const auto& w : words(b[j])) {
      if (wa.count(w)) return true;
    }
    return false;
  };
  auto negative = [&](Rng& r) -> std::pair<std::size_t, std::size_t> {
    std::size_t j = r.index(b.size());
    if (r.coin(0.8)) {
      std::vector<std::size_t> blocked;
      for (std::size_t i = 0; i < ents.size(); ++i) {
        if (i != b_entity[j] && shares_key(i, j)) blocked.push_back(i);
      }
      if (!blocked.empty()) return {blocked[r.index(blocked.size())], j};
    }
    std::size_t i = r.index(a.size());
    if (i == b_entity[j]) i = (i + 1) % a.size();
    return {i, j};
  };
  return detail::assemble(a, b, matches, spec.candidates, negative, rng);
}

/// Generator by name: "beer" or "restaurants".
inline Dataset by_name(const std::string& name, std::uint64_t seed = 2024) {
  if (name == "beer") return beer(seed);
  if (name == "restaurants") return restaurants(seed);
  throw ConfigError("unknown desk dataset '" + name + "' (expected beer or restaurants)");
}

}  // namespace emx::desk
