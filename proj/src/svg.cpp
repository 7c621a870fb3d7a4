#include "reslab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace reslab {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kPad = 48.0;

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

struct Box {
  double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;

  void add(Complex z) {
    x_lo = std::min(x_lo, z.real());
    x_hi = std::max(x_hi, z.real());
    y_lo = std::min(y_lo, z.imag());
    y_hi = std::max(y_hi, z.imag());
  }
  void pad() {
    const double dx = std::max(1e-9, 0.05 * (x_hi - x_lo));
    const double dy = std::max(1e-9, 0.05 * (y_hi - y_lo));
    x_lo -= dx;
    x_hi += dx;
    y_lo -= dy;
    y_hi += dy;
  }
};

struct Mapper {
  Box box;
  double sx(double x) const {
    return kPad + (x - box.x_lo) / (box.x_hi - box.x_lo) * (kWidth - 2 * kPad);
  }
  double sy(double y) const {
    return kHeight - kPad -
           (y - box.y_lo) / (box.y_hi - box.y_lo) * (kHeight - 2 * kPad);
  }
};

std::string header(const std::string& title) {
  std::string s =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" "
      "height=\"480\" viewBox=\"0 0 640 480\">\n"
      "<rect width=\"640\" height=\"480\" fill=\"#ffffff\"/>\n";
  s += "<text x=\"12\" y=\"20\" font-family=\"monospace\" font-size=\"13\" "
       "fill=\"#222\">" +
       title + "</text>\n";
  return s;
}

std::string axes(const Mapper& m) {
  std::string s;
  s += "<rect x=\"" + px(kPad) + "\" y=\"" + px(kPad) + "\" width=\"" +
       px(kWidth - 2 * kPad) + "\" height=\"" + px(kHeight - 2 * kPad) +
       "\" fill=\"none\" stroke=\"#999\" stroke-width=\"1\"/>\n";
  if (m.box.x_lo < 0 && m.box.x_hi > 0)
    s += "<line x1=\"" + px(m.sx(0)) + "\" y1=\"" + px(kPad) + "\" x2=\"" +
         px(m.sx(0)) + "\" y2=\"" + px(kHeight - kPad) +
         "\" stroke=\"#ccc\" stroke-width=\"1\"/>\n";
  if (m.box.y_lo < 0 && m.box.y_hi > 0)
    s += "<line x1=\"" + px(kPad) + "\" y1=\"" + px(m.sy(0)) + "\" x2=\"" +
         px(kWidth - kPad) + "\" y2=\"" + px(m.sy(0)) +
         "\" stroke=\"#ccc\" stroke-width=\"1\"/>\n";
  char label[192];
  std::snprintf(label, sizeof(label),
                "<text x=\"%.2f\" y=\"%.2f\" font-family=\"monospace\" "
                "font-size=\"10\" fill=\"#555\">re [%g, %g]  im [%g, %g]"
                "</text>\n",
                kPad, kHeight - 12.0, m.box.x_lo, m.box.x_hi, m.box.y_lo,
                m.box.y_hi);
  s += label;
  return s;
}

std::string polyline(const Mapper& m, const SvgSeries& series) {
  if (series.points.empty()) return "";
  std::string s = series.closed ? "<polygon points=\"" : "<polyline points=\"";
  for (Complex z : series.points)
    s += px(m.sx(z.real())) + "," + px(m.sy(z.imag())) + " ";
  s += "\" fill=\"none\" stroke=\"" + series.color +
       "\" stroke-width=\"1.5\"/>\n";
  return s;
}

std::string dot(const Mapper& m, const SvgMarker& marker) {
  return "<circle cx=\"" + px(m.sx(marker.at.real())) + "\" cy=\"" +
         px(m.sy(marker.at.imag())) + "\" r=\"" + px(marker.size) +
         "\" fill=\"" + marker.color + "\"/>\n";
}

}  // namespace

std::string svg_plane_plot(const std::vector<SvgSeries>& series,
                           const std::vector<SvgMarker>& markers,
                           const std::string& title) {
  Mapper m;
  bool seeded = false;
  for (const auto& s : series)
    for (Complex z : s.points) {
      if (!seeded) {
        m.box = {z.real(), z.real(), z.imag(), z.imag()};
        seeded = true;
      } else {
        m.box.add(z);
      }
    }
  for (const auto& mk : markers) {
    if (!seeded) {
      m.box = {mk.at.real(), mk.at.real(), mk.at.imag(), mk.at.imag()};
      seeded = true;
    } else {
      m.box.add(mk.at);
    }
  }
  m.box.pad();

  std::string out = header(title);
  out += axes(m);
  for (const auto& s : series) out += polyline(m, s);
  for (const auto& mk : markers) out += dot(m, mk);
  out += "</svg>\n";
  return out;
}

std::string svg_cone_region(const ConeRegion& region,
                            std::pair<double, double> interval,
                            const std::vector<SvgMarker>& markers,
                            const std::string& title) {
  const double eps = region.epsilon() > 0 ? region.epsilon() : 0.1;
  Mapper m;
  m.box = {interval.first, interval.second, -0.15 * eps, 1.3 * eps};
  for (const auto& mk : markers) m.box.add(mk.at);
  m.box.pad();

  std::string out = header(title);
  out += axes(m);
  out += "<line x1=\"" + px(m.sx(interval.first)) + "\" y1=\"" +
         px(m.sy(0)) + "\" x2=\"" + px(m.sx(interval.second)) + "\" y2=\"" +
         px(m.sy(0)) + "\" stroke=\"#bbb\" stroke-width=\"2\"/>\n";

  for (const auto& [a, b] : region.intervals()) {
    // truncated cone over [a, b]: boundary rays at 45 degrees capped by
    // the radius-eps arcs around the endpoints
    std::string pts;
    auto add = [&](double x, double y) {
      pts += px(m.sx(x)) + "," + px(m.sy(y)) + " ";
    };
    add(a, 0);
    const int arc_n = 10;
    for (int k = 0; k <= arc_n; ++k) {
      const double ang = 3.0 * std::numbers::pi / 4.0 -
                         (std::numbers::pi / 4.0) * k / arc_n;
      add(a + eps * std::cos(ang), eps * std::sin(ang));
    }
    for (int k = 0; k <= arc_n; ++k) {
      const double ang = std::numbers::pi / 2.0 -
                         (std::numbers::pi / 4.0) * k / arc_n;
      add(b + eps * std::cos(ang), eps * std::sin(ang));
    }
    add(b, 0);
    out += "<polygon points=\"" + pts +
           "\" fill=\"#1f6fb2\" fill-opacity=\"0.18\" stroke=\"#1f6fb2\" "
           "stroke-width=\"1\"/>\n";
    out += "<line x1=\"" + px(m.sx(a)) + "\" y1=\"" + px(m.sy(0)) +
           "\" x2=\"" + px(m.sx(b)) + "\" y2=\"" + px(m.sy(0)) +
           "\" stroke=\"#1f6fb2\" stroke-width=\"4\"/>\n";
  }
  for (const auto& mk : markers) out += dot(m, mk);
  out += "</svg>\n";
  return out;
}

}  // namespace reslab
