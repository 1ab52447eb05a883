#include "stubborn/chart.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "stubborn/errors.hpp"

namespace stubborn {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 30.0;
constexpr double kBottom = 50.0;
constexpr double kPlotW = kWidth - kLeft - kRight;
constexpr double kPlotH = kHeight - kTop - kBottom;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

void open_svg(std::ostringstream& os, const std::string& title, const std::string& xlabel,
              const std::string& ylabel) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << num(kWidth / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
     << title << "</text>\n";
  os << "<line class=\"axis\" x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop + kPlotH) << "\" x2=\""
     << num(kLeft + kPlotW) << "\" y2=\"" << num(kTop + kPlotH) << "\" stroke=\"black\"/>\n";
  os << "<line class=\"axis\" x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\""
     << num(kLeft) << "\" y2=\"" << num(kTop + kPlotH) << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << num(kLeft + kPlotW / 2) << "\" y=\"" << num(kHeight - 10)
     << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel << "</text>\n";
  os << "<text x=\"15\" y=\"" << num(kTop + kPlotH / 2) << "\" text-anchor=\"middle\" font-size=\"12\""
     << " transform=\"rotate(-90 15 " << num(kTop + kPlotH / 2) << ")\">" << ylabel << "</text>\n";
}

void tick(std::ostringstream& os, double x, double y, const std::string& text, bool vertical_axis) {
  if (vertical_axis) {
    os << "<text x=\"" << num(x - 5) << "\" y=\"" << num(y + 4)
       << "\" text-anchor=\"end\" font-size=\"10\">" << text << "</text>\n";
  } else {
    os << "<text x=\"" << num(x) << "\" y=\"" << num(y + 15)
       << "\" text-anchor=\"middle\" font-size=\"10\">" << text << "</text>\n";
  }
}

}  // namespace

std::string reward_curve_svg(std::span<const SeriesPoint> series) {
  std::ostringstream os;
  open_svg(os, "Mean episode reward per generation", "generation", "mean episode reward");
  if (!series.empty()) {
    auto [xmin_it, xmax_it] = std::minmax_element(
        series.begin(), series.end(), [](const auto& a, const auto& b) { return a.x < b.x; });
    auto [ymin_it, ymax_it] = std::minmax_element(
        series.begin(), series.end(), [](const auto& a, const auto& b) { return a.y < b.y; });
    double xmin = xmin_it->x, xmax = xmax_it->x, ymin = ymin_it->y, ymax = ymax_it->y;
    if (xmax == xmin) xmax = xmin + 1.0;
    if (ymax == ymin) {
      ymin -= 1.0;
      ymax += 1.0;
    }
    auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * kPlotW; };
    auto py = [&](double y) { return kTop + (ymax - y) / (ymax - ymin) * kPlotH; };

    tick(os, kLeft, py(ymin), label(ymin), true);
    tick(os, kLeft, py(ymax), label(ymax), true);
    tick(os, px(xmin), kTop + kPlotH, label(xmin), false);
    tick(os, px(xmax), kTop + kPlotH, label(xmax), false);

    os << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < series.size(); ++i) {
      if (i) os << ' ';
      os << num(px(series[i].x)) << ',' << num(py(series[i].y));
    }
    os << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string zeta_bars_svg(const ZetaBars& bars) {
  std::ostringstream os;
  open_svg(os, "zeta(n, d) per agent", "n (turns of disagreement), grouped by d", "zeta");
  auto py = [](double y) { return kTop + (1.0 - y) * kPlotH; };
  tick(os, kLeft, py(0.0), "0", true);
  tick(os, kLeft, py(0.5), "0.5", true);
  tick(os, kLeft, py(1.0), "1", true);

  const std::size_t groups = bars.n_values.size() * bars.d_values.size();
  if (groups > 0) {
    const double group_w = kPlotW / static_cast<double>(groups);
    const double bar_w = group_w * 0.35;
    const char* colours[2] = {"steelblue", "darkorange"};
    std::size_t g = 0;
    for (std::size_t di = 0; di < bars.d_values.size(); ++di) {
      for (std::size_t ni = 0; ni < bars.n_values.size(); ++ni, ++g) {
        const double gx = kLeft + group_w * static_cast<double>(g);
        for (std::size_t a = 0; a < 2; ++a) {
          const auto& vals = bars.values[static_cast<Agent>(a)];
          const double v = g < vals.size() ? std::clamp(vals[g], 0.0, 1.0) : 0.0;
          const double x = gx + group_w * 0.15 + bar_w * static_cast<double>(a);
          os << "<rect x=\"" << num(x) << "\" y=\"" << num(py(v)) << "\" width=\"" << num(bar_w)
             << "\" height=\"" << num(kTop + kPlotH - py(v)) << "\" fill=\"" << colours[a]
             << "\"/>\n";
        }
        tick(os, gx + group_w / 2, kTop + kPlotH,
             "n=" + std::to_string(bars.n_values[ni]) + " d=" + label(bars.d_values[di]), false);
      }
    }
  }
  os << "<text x=\"" << num(kLeft + kPlotW - 60) << "\" y=\"" << num(kTop + 10)
     << "\" font-size=\"10\" fill=\"steelblue\">agent A</text>\n";
  os << "<text x=\"" << num(kLeft + kPlotW - 60) << "\" y=\"" << num(kTop + 22)
     << "\" font-size=\"10\" fill=\"darkorange\">agent B</text>\n";
  os << "</svg>\n";
  return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out.flush()) throw IoError("write failed on " + path.string());
}

}  // namespace stubborn
