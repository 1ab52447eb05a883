#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "stubborn/env.hpp"

namespace stubborn {

struct SeriesPoint {
  double x = 0.0;
  double y = 0.0;
};

/// Line chart of mean episode reward against generation. Empty input gives axes only.
std::string reward_curve_svg(std::span<const SeriesPoint> series);

/// zeta against n, one group of bars per (d, n), one bar per agent.
struct ZetaBars {
  std::vector<int> n_values;
  std::vector<double> d_values;
  // d-major, n inner; same layout as ZetaMatrix entries.
  PerAgent<std::vector<double>> values;
};

std::string zeta_bars_svg(const ZetaBars& bars);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace stubborn
