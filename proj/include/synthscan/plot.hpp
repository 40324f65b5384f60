#pragma once

#include <filesystem>
#include <vector>

namespace synthscan {

// Minimal deterministic chart rendering to PPM rasters. Values and labels
// live in the TSV written next to each chart; these are quick visual aids.

void render_bar_chart(const std::vector<double>& values, const std::filesystem::path& path,
                      int width = 640, int height = 360);

// Two distributions as paired histogram bars over a shared range.
void render_histogram_pair(const std::vector<double>& a, const std::vector<double>& b, int bins,
                           const std::filesystem::path& path, int width = 640, int height = 360);

}  // namespace synthscan
