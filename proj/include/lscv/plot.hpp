#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "lscv/stats.hpp"

namespace lscv {

/// Minimal static SVG rendering of study aggregates.
namespace svg {

inline constexpr double kWidth = 480.0;
inline constexpr double kHeight = 320.0;
inline constexpr double kMargin = 48.0;

inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

inline std::string label(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

class Canvas {
 public:
  Canvas(std::string title, double x_lo, double x_hi, double y_lo, double y_hi)
      : title_(std::move(title)), x_lo_(x_lo), x_hi_(x_hi), y_lo_(y_lo), y_hi_(y_hi) {
    if (!(x_hi_ > x_lo_)) x_hi_ = x_lo_ + 1.0;
    if (!(y_hi_ > y_lo_)) y_hi_ = y_lo_ + 1.0;
  }

  double px(double x) const { return kMargin + (x - x_lo_) / (x_hi_ - x_lo_) * (kWidth - 2.0 * kMargin); }
  double py(double y) const { return kHeight - kMargin - (y - y_lo_) / (y_hi_ - y_lo_) * (kHeight - 2.0 * kMargin); }

  void rect(double x0, double y0, double x1, double y1, const char* fill) {
    body_ += "<rect x=\"" + num(std::min(px(x0), px(x1))) + "\" y=\"" + num(std::min(py(y0), py(y1))) +
             "\" width=\"" + num(std::abs(px(x1) - px(x0))) + "\" height=\"" + num(std::abs(py(y1) - py(y0))) +
             "\" fill=\"" + fill + "\" stroke=\"black\" stroke-width=\"0.5\"/>\n";
  }

  void line(double x0, double y0, double x1, double y1, const char* stroke = "black") {
    body_ += "<line x1=\"" + num(px(x0)) + "\" y1=\"" + num(py(y0)) + "\" x2=\"" + num(px(x1)) + "\" y2=\"" +
             num(py(y1)) + "\" stroke=\"" + stroke + "\" stroke-width=\"1\"/>\n";
  }

  void text(double x, double y, const std::string& s, const char* anchor = "middle") {
    body_ += "<text x=\"" + num(px(x)) + "\" y=\"" + num(py(y)) + "\" font-size=\"11\" text-anchor=\"" + anchor +
             "\">" + s + "</text>\n";
  }

  void write(std::ostream& out) const {
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << kWidth / 2 << "\" y=\"20\" font-size=\"13\" text-anchor=\"middle\">" << title_ << "</text>\n"
        << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\"" << kWidth - kMargin << "\" y2=\""
        << kHeight - kMargin << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin << "\" y2=\"" << kHeight - kMargin
        << "\" stroke=\"black\"/>\n"
        << body_ << "</svg>\n";
  }

 private:
  std::string title_;
  double x_lo_, x_hi_, y_lo_, y_hi_;
  std::string body_;
};

}  // namespace svg

inline void write_histogram_svg(std::ostream& out, const Histogram& h, const std::string& title,
                                std::optional<double> marker = std::nullopt) {
  if (h.counts.empty()) return;
  const std::size_t top = std::max<std::size_t>(1, *std::max_element(h.counts.begin(), h.counts.end()));
  svg::Canvas c(title, h.edges.front(), h.edges.back(), 0.0, static_cast<double>(top));
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    if (h.counts[i] > 0) c.rect(h.edges[i], 0.0, h.edges[i + 1], static_cast<double>(h.counts[i]), "#8fb3d9");
  }
  if (marker) c.line(*marker, 0.0, *marker, static_cast<double>(top), "red");
  const double below = -0.06 * static_cast<double>(top);
  c.text(h.edges.front(), below, svg::label(h.edges.front()));
  c.text(h.edges.back(), below, svg::label(h.edges.back()));
  c.text(h.edges.front(), static_cast<double>(top), std::to_string(top) + " ", "end");
  c.write(out);
}

/// One box per named group; whiskers at the 5% and 95% levels.
inline void write_boxplot_svg(std::ostream& out, const std::vector<std::pair<std::string, BoxStats>>& groups,
                              const std::string& title) {
  if (groups.empty()) return;
  double lo = groups.front().second.q05, hi = groups.front().second.q95;
  for (const auto& [name, b] : groups) {
    lo = std::min(lo, b.q05);
    hi = std::max(hi, b.q95);
  }
  const double pad = 0.05 * (hi - lo > 0.0 ? hi - lo : 1.0);
  const double k = static_cast<double>(groups.size());
  svg::Canvas c(title, 0.0, k, lo - pad, hi + pad);
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& b = groups[i].second;
    const double mid = static_cast<double>(i) + 0.5;
    c.line(mid, b.q05, mid, b.q25);
    c.line(mid, b.q75, mid, b.q95);
    c.line(mid - 0.1, b.q05, mid + 0.1, b.q05);
    c.line(mid - 0.1, b.q95, mid + 0.1, b.q95);
    c.rect(mid - 0.25, b.q25, mid + 0.25, b.q75, "#d9c28f");
    c.line(mid - 0.25, b.q50, mid + 0.25, b.q50);
    c.text(mid, lo - pad - 0.08 * (hi - lo + 2.0 * pad), groups[i].first);
  }
  c.text(0.0, hi + pad, svg::label(hi + pad) + " ", "end");
  c.text(0.0, lo - pad, svg::label(lo - pad) + " ", "end");
  c.write(out);
}

}  // namespace lscv
