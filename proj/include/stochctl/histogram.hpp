// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "stochctl/manifold.hpp"

namespace stochctl {

/// Cell-indexed occupation counts on an equal-measure grid.
struct OccupationHistogram {
  CellGrid grid;
  std::vector<std::uint64_t> counts;
  std::uint64_t total_samples = 0;
  std::uint64_t burn_in_discarded = 0;

  explicit OccupationHistogram(const CellGrid& g) : grid(g), counts(g.cell_count(), 0) {}

  void add(std::size_t flat, std::uint64_t n = 1) {
    counts[flat] += n;
    total_samples += n;
  }

  void add_coords(const Vec& x) { add(cell_index_coords(grid, x).flat); }

  void merge(const OccupationHistogram& other) {
    if (!(other.grid == grid)) throw Error(ErrorCode::BadParams, "merging histograms on different grids");
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
    total_samples += other.total_samples;
    burn_in_discarded += other.burn_in_discarded;
  }

  std::vector<double> weights() const {
    std::vector<double> w(counts.size(), 0.0);
    if (total_samples == 0) return w;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      w[i] = static_cast<double>(counts[i]) / static_cast<double>(total_samples);
    }
    return w;
  }
};

/// Shortest round-trip decimal form of a double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

/// CSV with header "cell_id,count,weight", one row per cell.
inline void write_histogram_csv(std::ostream& os, const OccupationHistogram& hist) {
  os << "cell_id,count,weight\n";
  const auto w = hist.weights();
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    os << i << ',' << hist.counts[i] << ',' << format_double(w[i]) << '\n';
  }
}

/// Binary PGM (P5, maxval 255) of a torus histogram. Width is the x
/// resolution, height the y resolution; pixel (row iy, column ix) holds
/// round(255 * count / max_count).
inline void write_heatmap_pgm(std::ostream& os, const OccupationHistogram& hist) {
  if (hist.grid.manifold.kind != ManifoldKind::Torus2) {
    throw Error(ErrorCode::BadParams, "heatmaps are only defined for torus grids");
  }
  const auto [rx, ry] = hist.grid.resolution;
  os << "P5\n" << rx << ' ' << ry << "\n255\n";
  const std::uint64_t max_count =
      hist.counts.empty() ? 0 : *std::max_element(hist.counts.begin(), hist.counts.end());
  std::string pixels(hist.counts.size(), '\0');
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    const double scaled =
        max_count == 0 ? 0.0 : 255.0 * static_cast<double>(hist.counts[i]) / static_cast<double>(max_count);
    pixels[i] = static_cast<char>(static_cast<unsigned char>(std::lround(scaled)));
  }
  os.write(pixels.data(), static_cast<std::streamsize>(pixels.size()));
}

/// Finite-sample verdict for one density assertion.
enum class Verdict { Dense, NotDense, Inconclusive };

constexpr std::string_view to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::Dense: return "Dense";
    case Verdict::NotDense: return "NotDense";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

}  // namespace stochctl
