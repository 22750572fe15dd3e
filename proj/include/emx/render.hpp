#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "emx/explainer.hpp"
#include "emx/record.hpp"
#include "emx/tokenize.hpp"

namespace emx {

struct RenderedExplanation {
  std::string html;
  std::string summary;
};

inline std::string html_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += c;
    }
  }
  return out;
}

/// Fixed-point text with `digits` decimals, locale independent.
inline std::string fixed(double v, int digits) {
  if (v == 0.0) v = 0.0;  // drop the sign of -0
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
  std::string s(buf, r.ptr);
  if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);
  return s;
}

/// Value range shown on a panel's bar axis: covers 0, every w and every w + p.
struct BarAxis {
  double lo = 0.0;
  double hi = 0.0;
  double width = 240.0;

  static BarAxis covering(const std::vector<ExplanationEntry>& entries, double width = 240.0) {
    BarAxis a;
    a.width = width;
    for (const auto& e : entries) {
      a.lo = std::min({a.lo, e.w, e.w + e.p});
      a.hi = std::max({a.hi, e.w, e.w + e.p});
    }
    if (a.hi - a.lo <= 0.0) a.hi = a.lo + 1.0;
    return a;
  }

  double scale() const { return width / (hi - lo); }
  double x(double v) const { return (v - lo) * scale(); }
};

/// Pixel extents of one feature's bars. The signed bar runs from 0 to w; the
/// gray extension from w to w + p and is absent when p = 0.
struct BarGeometry {
  double bar_from = 0.0;
  double bar_to = 0.0;
  std::optional<double> gray_from;
  std::optional<double> gray_to;
};

inline BarGeometry bar_geometry(double w, double p, const BarAxis& axis) {
  BarGeometry g;
  g.bar_from = axis.x(std::min(0.0, w));
  g.bar_to = axis.x(std::max(0.0, w));
  if (p != 0.0) {
    g.gray_from = axis.x(std::min(w, w + p));
    g.gray_to = axis.x(std::max(w, w + p));
  }
  return g;
}

namespace detail {

inline constexpr const char* kPositive = "#2f7d32";
inline constexpr const char* kNegative = "#c62828";
inline constexpr const char* kPotential = "#9e9e9e";
inline constexpr double kRowHeight = 22.0;
inline constexpr double kLabelWidth = 220.0;

inline std::string feature_label(const ExplanationEntry& e) {
  if (e.spec.whole_record) return "(whole record)";
  std::string where = e.spec.location == TokenLocation::kName ? e.attribute + " (name)" : e.attribute;
  return where + ": " + e.text;
}

inline std::string svg_panel(const Explanation& e) {
  const BarAxis axis = BarAxis::covering(e.entries);
  const double height = kRowHeight * static_cast<double>(std::max<std::size_t>(e.entries.size(), 1)) + 24.0;
  const double total = kLabelWidth + axis.width + 20.0;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" class=\"bars\" width=\"" << fixed(total, 0) << "\" height=\""
    << fixed(height, 0) << "\" data-lo=\"" << fixed(axis.lo, 6) << "\" data-hi=\"" << fixed(axis.hi, 6)
    << "\" data-scale=\"" << fixed(axis.scale(), 6) << "\">\n";
  const double zero = kLabelWidth + axis.x(0.0);
  for (std::size_t i = 0; i < e.entries.size(); ++i) {
    const auto& entry = e.entries[i];
    const double y = 4.0 + kRowHeight * static_cast<double>(i);
    const auto g = bar_geometry(entry.w, entry.p, axis);
    s << "<g class=\"feature\" data-feature=\"" << entry.feature << "\" data-w=\"" << fixed(entry.w, 6)
      << "\" data-p=\"" << fixed(entry.p, 6) << "\">";
    s << "<text x=\"" << fixed(kLabelWidth - 6.0, 2) << "\" y=\"" << fixed(y + 14.0, 2)
      << "\" text-anchor=\"end\">" << html_escape(feature_label(entry)) << "</text>";
    s << "<rect class=\"w\" x=\"" << fixed(kLabelWidth + g.bar_from, 2) << "\" y=\"" << fixed(y + 3.0, 2)
      << "\" width=\"" << fixed(g.bar_to - g.bar_from, 2) << "\" height=\"14\" fill=\""
      << (entry.w >= 0.0 ? kPositive : kNegative) << "\"/>";
    if (g.gray_from) {
      s << "<rect class=\"p\" x=\"" << fixed(kLabelWidth + *g.gray_from, 2) << "\" y=\"" << fixed(y + 3.0, 2)
        << "\" width=\"" << fixed(*g.gray_to - *g.gray_from, 2) << "\" height=\"14\" fill=\"" << kPotential
        << "\" fill-opacity=\"0.7\" data-from=\"" << fixed(entry.w, 6) << "\" data-to=\""
        << fixed(entry.w + entry.p, 6) << "\"/>";
    }
    s << "</g>\n";
  }
  s << "<line x1=\"" << fixed(zero, 2) << "\" y1=\"0\" x2=\"" << fixed(zero, 2) << "\" y2=\"" << fixed(height, 0)
    << "\" stroke=\"#333\"/>\n</svg>\n";
  return s.str();
}

/// Record as a table, with the tokens of `entries` on `side` highlighted.
inline std::string record_table(const Record& r, Side side, const std::vector<ExplanationEntry>& entries) {
  std::ostringstream s;
  s << "<table class=\"record\" data-side=\"" << side_name(side) << "\">\n";
  for (std::size_t ai = 0; ai < r.size(); ++ai) {
    const auto& attr = r[ai];
    auto mark = [&](TokenLocation loc, const std::vector<std::string>& tokens) {
      std::vector<std::optional<std::size_t>> owner(tokens.size());
      for (const auto& e : entries) {
        const auto& f = e.spec;
        if (f.whole_record || f.side != side || f.location != loc || f.attribute_index != ai) continue;
        for (std::size_t t = f.start; t < f.start + f.length && t < tokens.size(); ++t) owner[t] = e.feature;
      }
      std::string out;
      for (std::size_t t = 0; t < tokens.size(); ++t) {
        if (t) out += ' ';
        if (owner[t]) {
          out += "<mark data-feature=\"" + std::to_string(*owner[t]) + "\">" + html_escape(tokens[t]) + "</mark>";
        } else {
          out += html_escape(tokens[t]);
        }
      }
      return out;
    };
    std::string value = attr.value.is_null() ? "<span class=\"null\">null</span>"
                                             : mark(TokenLocation::kValue, tokenize(attr.value));
    s << "<tr><th>" << mark(TokenLocation::kName, split_whitespace(attr.name)) << "</th><td>" << value
      << "</td></tr>\n";
  }
  s << "</table>\n";
  return s.str();
}

inline std::string panel_title(const Explanation& e) {
  if (e.side == Side::kJoint) return "Joint explanation";
  return std::string("Explanation for record ") + (e.side == Side::kA ? "A" : "B");
}

}  // namespace detail

/// Static HTML report of a (dual) explanation: header with the match score,
/// one panel per explanation with its attribution bars and the explained
/// record(s) with selected tokens highlighted.
inline RenderedExplanation render(const DualExplanation& dual, const RecordPair& pair) {
  RenderedExplanation out;
  const double score = dual.parts.empty() ? 0.0 : dual.parts.front().score;
  const double threshold = dual.parts.empty() ? 0.5 : dual.parts.front().threshold;
  const bool match = score > threshold;
  std::ostringstream h;
  h << "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>Explanation "
    << html_escape(dual.pair_id) << "</title>\n"
    << "<style>\nbody{font-family:sans-serif;margin:1.5em;color:#222}\n"
       ".panel{border:1px solid #ccc;padding:0.8em;margin-bottom:1em}\n"
       "table.record{border-collapse:collapse;margin-top:0.5em}\n"
       "table.record th{text-align:right;padding:2px 8px;font-weight:normal;color:#555}\n"
       "table.record td{padding:2px 8px}\nmark{background:#fff3b0}\n.null{color:#999}\n"
       "svg text{font-size:12px}\n</style>\n</head>\n<body>\n";
  h << "<header data-score=\"" << fixed(score, 6) << "\" data-threshold=\"" << fixed(threshold, 6)
    << "\" data-label=\"" << (match ? "match" : "non-match") << "\">\n<h1>Pair " << html_escape(dual.pair_id)
    << "</h1>\n<p>Match score " << fixed(score, 3) << ", threshold " << fixed(threshold, 3) << ", predicted "
    << (match ? "match" : "non-match") << "</p>\n</header>\n";
  for (const auto& e : dual.parts) {
    h << "<section class=\"panel\" data-side=\"" << side_name(e.side) << "\" data-granularity=\"" << e.granularity
      << "\">\n<h2>" << detail::panel_title(e) << "</h2>\n<p>Granularity " << e.granularity
      << ", predicted counterfactual strength " << fixed(e.cfs_hat, 3) << ", actual " << fixed(e.cfs_actual, 3)
      << ", steps " << e.k_g << "</p>\n";
    h << detail::svg_panel(e);
    if (e.side == Side::kJoint) {
      h << detail::record_table(pair.a, Side::kA, e.entries) << detail::record_table(pair.b, Side::kB, e.entries);
    } else {
      h << detail::record_table(pair.side(e.side), e.side, e.entries);
    }
    h << "</section>\n";
  }
  h << "<footer><p><span style=\"color:" << detail::kPositive << "\">&#9632;</span> supports match "
    << "<span style=\"color:" << detail::kNegative << "\">&#9632;</span> against match "
    << "<span style=\"color:" << detail::kPotential << "\">&#9632;</span> potential if copied to the other record"
    << "</p></footer>\n</body>\n</html>\n";
  out.html = h.str();

  std::ostringstream s;
  s << "pair " << dual.pair_id << ": score " << fixed(score, 3) << " (" << (match ? "match" : "non-match") << ")";
  for (const auto& e : dual.parts) {
    s << "; " << side_name(e.side) << ": n=" << e.granularity << ", " << e.entries.size() << " features";
  }
  out.summary = s.str();
  return out;
}

}  // namespace emx
