#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace unlinked {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

namespace detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string tick_label(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", value);
  return buf;
}

}  // namespace detail

/// Writes a self-contained log-log scatter-and-line plot. The output depends
/// only on the arguments, so repeated runs produce identical bytes. Optional
/// annotation lines are printed inside the lower-left corner of the frame.
inline void write_loglog_svg(const std::filesystem::path& path, const std::string& title,
                            const std::string& xlabel, const std::string& ylabel,
                            const std::vector<PlotSeries>& series,
                            const std::vector<std::string>& annotations = {}) {
  if (series.empty()) throw std::invalid_argument("nothing to plot");
  double lx_min = 0, lx_max = 0, ly_min = 0, ly_max = 0;
  bool seen = false;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("series length mismatch");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!(s.x[i] > 0.0) || !(s.y[i] > 0.0))
        throw std::invalid_argument("log-log plots need positive data");
      const double lx = std::log10(s.x[i]);
      const double ly = std::log10(s.y[i]);
      if (!seen) {
        lx_min = lx_max = lx;
        ly_min = ly_max = ly;
        seen = true;
      } else {
        lx_min = std::min(lx_min, lx);
        lx_max = std::max(lx_max, lx);
        ly_min = std::min(ly_min, ly);
        ly_max = std::max(ly_max, ly);
      }
    }
  }
  if (!seen) throw std::invalid_argument("all series are empty");
  if (lx_max - lx_min < 1e-9) {
    lx_min -= 0.5;
    lx_max += 0.5;
  }
  if (ly_max - ly_min < 1e-9) {
    ly_min -= 0.5;
    ly_max += 0.5;
  }
  const double pad_x = 0.04 * (lx_max - lx_min);
  const double pad_y = 0.08 * (ly_max - ly_min);
  lx_min -= pad_x;
  lx_max += pad_x;
  ly_min -= pad_y;
  ly_max += pad_y;

  const double width = 760, height = 520;
  const double ml = 78, mr = 24, mt = 46, mb = 58;
  const double pw = width - ml - mr;
  const double ph = height - mt - mb;
  auto px = [&](double lx) { return ml + (lx - lx_min) / (lx_max - lx_min) * pw; };
  auto py = [&](double ly) { return mt + (ly_max - ly) / (ly_max - ly_min) * ph; };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b"};
  const std::size_t n_colors = sizeof(palette) / sizeof(palette[0]);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"26\" font-family=\"sans-serif\" font-size=\"16\""
      << " text-anchor=\"middle\">" << title << "</text>\n";

  // frame
  out << "<rect x=\"" << detail::svg_num(ml) << "\" y=\"" << detail::svg_num(mt) << "\" width=\""
      << detail::svg_num(pw) << "\" height=\"" << detail::svg_num(ph)
      << "\" fill=\"none\" stroke=\"#333\"/>\n";

  const int n_ticks = 5;
  for (int t = 0; t < n_ticks; ++t) {
    const double frac = static_cast<double>(t) / (n_ticks - 1);
    const double lx = lx_min + frac * (lx_max - lx_min);
    const double ly = ly_min + frac * (ly_max - ly_min);
    const double gx = px(lx);
    const double gy = py(ly);
    out << "<line x1=\"" << detail::svg_num(gx) << "\" y1=\"" << detail::svg_num(mt)
        << "\" x2=\"" << detail::svg_num(gx) << "\" y2=\"" << detail::svg_num(mt + ph)
        << "\" stroke=\"#ddd\"/>\n";
    out << "<line x1=\"" << detail::svg_num(ml) << "\" y1=\"" << detail::svg_num(gy)
        << "\" x2=\"" << detail::svg_num(ml + pw) << "\" y2=\"" << detail::svg_num(gy)
        << "\" stroke=\"#ddd\"/>\n";
    out << "<text x=\"" << detail::svg_num(gx) << "\" y=\"" << detail::svg_num(mt + ph + 18)
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">"
        << detail::tick_label(std::pow(10.0, lx)) << "</text>\n";
    out << "<text x=\"" << detail::svg_num(ml - 6) << "\" y=\"" << detail::svg_num(gy + 4)
        << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">"
        << detail::tick_label(std::pow(10.0, ly)) << "</text>\n";
  }
  out << "<text x=\"" << width / 2 << "\" y=\"" << height - 14
      << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">" << xlabel
      << "</text>\n";
  out << "<text x=\"20\" y=\"" << height / 2
      << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\""
      << " transform=\"rotate(-90 20 " << height / 2 << ")\">" << ylabel << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = palette[s % n_colors];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      if (i > 0) out << ' ';
      out << detail::svg_num(px(std::log10(series[s].x[i]))) << ','
          << detail::svg_num(py(std::log10(series[s].y[i])));
    }
    out << "\"/>\n";
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      out << "<circle cx=\"" << detail::svg_num(px(std::log10(series[s].x[i]))) << "\" cy=\""
          << detail::svg_num(py(std::log10(series[s].y[i]))) << "\" r=\"3\" fill=\"" << color
          << "\"/>\n";
    }
    const double leg_y = mt + 16 + 18 * static_cast<double>(s);
    out << "<line x1=\"" << detail::svg_num(ml + pw - 150) << "\" y1=\"" << detail::svg_num(leg_y)
        << "\" x2=\"" << detail::svg_num(ml + pw - 126) << "\" y2=\"" << detail::svg_num(leg_y)
        << "\" stroke=\"" << color << "\" stroke-width=\"1.8\"/>\n";
    out << "<text x=\"" << detail::svg_num(ml + pw - 120) << "\" y=\""
        << detail::svg_num(leg_y + 4) << "\" font-family=\"sans-serif\" font-size=\"12\">"
        << series[s].label << "</text>\n";
  }
  for (std::size_t a = 0; a < annotations.size(); ++a) {
    const double note_y = mt + ph - 10 - 16 * static_cast<double>(annotations.size() - 1 - a);
    out << "<text x=\"" << detail::svg_num(ml + 10) << "\" y=\"" << detail::svg_num(note_y)
        << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#333\">" << annotations[a]
        << "</text>\n";
  }
  out << "</svg>\n";
  out.close();
  if (!out) throw std::runtime_error("flush failed while writing " + path.string());
}

}  // namespace unlinked
