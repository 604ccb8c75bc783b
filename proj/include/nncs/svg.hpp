#pragma once

// Standalone SVG 1.1 heatmap for phase-transition grids. Fixed 800x800
// canvas, success fractions on a 256-step ramp through the 10 viridis
// anchor colors, hatched cells for empty bins, legend bar on the right.
// Output bytes are a pure function of the grid.

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "nncs/experiments.hpp"
#include "nncs/io.hpp"

namespace nncs {

namespace svgdetail {

inline constexpr std::array<std::array<int, 3>, 10> ramp_anchors{{
    {68, 1, 84},
    {72, 40, 120},
    {62, 74, 137},
    {49, 104, 142},
    {38, 130, 142},
    {31, 158, 137},
    {53, 183, 121},
    {110, 206, 88},
    {181, 222, 43},
    {253, 231, 37},
}};

// step in [0, 255] -> "#rrggbb", linear interpolation between anchors
inline std::string ramp_color(int step) {
  if (step < 0) step = 0;
  if (step > 255) step = 255;
  const double t = static_cast<double>(step) / 255.0;
  const double pos = t * 9.0;
  int seg = static_cast<int>(pos);
  if (seg > 8) seg = 8;
  const double local = pos - seg;
  char buf[8];
  buf[0] = '#';
  const char* hex = "0123456789abcdef";
  for (int c = 0; c < 3; ++c) {
    const double lo = ramp_anchors[seg][c], hi = ramp_anchors[seg + 1][c];
    int v = static_cast<int>(std::lround(lo + (hi - lo) * local));
    if (v < 0) v = 0;
    if (v > 255) v = 255;
    buf[1 + 2 * c] = hex[v / 16];
    buf[2 + 2 * c] = hex[v % 16];
  }
  return std::string(buf, 7);
}

inline int fraction_step(double frac) {
  if (!(frac >= 0.0)) frac = 0.0;
  if (frac > 1.0) frac = 1.0;
  int k = static_cast<int>(std::floor(frac * 256.0));
  if (k > 255) k = 255;
  return k;
}

inline std::string num(double v) { return format_double(v); }

}  // namespace svgdetail

inline std::string render_heatmap_svg(const PhaseGrid& grid) {
  if (grid.bins == 0 || grid.count.empty())
    throw std::invalid_argument("render_heatmap_svg: empty grid");
  using svgdetail::num;

  const double px = 80.0, py = 60.0;   // plot origin (top-left)
  const double pw = 600.0, ph = 600.0;
  const double cell_w = pw / static_cast<double>(grid.bins);
  const double cell_h = ph / static_cast<double>(grid.bins);

  std::string s;
  s.reserve(1 << 16);
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"800\" height=\"800\" "
       "viewBox=\"0 0 800 800\">\n";
  s += "<defs>\n<pattern id=\"empty\" width=\"8\" height=\"8\" patternUnits=\"userSpaceOnUse\">"
       "<rect width=\"8\" height=\"8\" fill=\"#f0f0f0\"/>"
       "<path d=\"M0 8 L8 0\" stroke=\"#b0b0b0\" stroke-width=\"1\"/></pattern>\n</defs>\n";
  s += "<rect width=\"800\" height=\"800\" fill=\"#ffffff\"/>\n";

  for (std::size_t i = 0; i < grid.bins; ++i) {
    for (std::size_t j = 0; j < grid.bins; ++j) {
      const long cnt = grid.count[i * grid.bins + j];
      const long suc = grid.success[i * grid.bins + j];
      const double x = px + static_cast<double>(i) * cell_w;
      const double y = py + ph - static_cast<double>(j + 1) * cell_h;
      std::string fill;
      if (cnt <= 0) {
        fill = "url(#empty)";
      } else {
        const double frac = static_cast<double>(suc) / static_cast<double>(cnt);
        fill = svgdetail::ramp_color(svgdetail::fraction_step(frac));
      }
      s += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(cell_w) +
           "\" height=\"" + num(cell_h) + "\" fill=\"" + fill + "\"/>\n";
    }
  }

  s += "<rect x=\"80\" y=\"60\" width=\"600\" height=\"600\" fill=\"none\" stroke=\"#000000\" "
       "stroke-width=\"1\"/>\n";

  // axis ticks and labels at 0, 0.25, ..., 1
  for (int k = 0; k <= 4; ++k) {
    const double f = static_cast<double>(k) / 4.0;
    const double tx = px + f * pw;
    const double ty = py + ph - f * ph;
    s += "<line x1=\"" + num(tx) + "\" y1=\"660\" x2=\"" + num(tx) +
         "\" y2=\"666\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
    s += "<text x=\"" + num(tx) + "\" y=\"682\" font-family=\"monospace\" font-size=\"14\" "
         "text-anchor=\"middle\">" + num(f) + "</text>\n";
    s += "<line x1=\"74\" y1=\"" + num(ty) + "\" x2=\"80\" y2=\"" + num(ty) +
         "\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
    s += "<text x=\"68\" y=\"" + num(ty + 5.0) + "\" font-family=\"monospace\" font-size=\"14\" "
         "text-anchor=\"end\">" + num(f) + "</text>\n";
  }
  s += "<text x=\"380\" y=\"715\" font-family=\"monospace\" font-size=\"16\" "
       "text-anchor=\"middle\">delta = m/n</text>\n";
  s += "<text x=\"30\" y=\"360\" font-family=\"monospace\" font-size=\"16\" "
       "text-anchor=\"middle\" transform=\"rotate(-90 30 360)\">r = s/m</text>\n";

  // legend: 256 slabs from 0 (bottom) to 1 (top)
  const double lx = 710.0, lw = 30.0;
  const double lh = ph / 256.0;
  for (int k = 0; k < 256; ++k) {
    const double y = py + ph - static_cast<double>(k + 1) * lh;
    s += "<rect x=\"" + num(lx) + "\" y=\"" + num(y) + "\" width=\"" + num(lw) + "\" height=\"" +
         num(lh) + "\" fill=\"" + svgdetail::ramp_color(k) + "\"/>\n";
  }
  s += "<rect x=\"710\" y=\"60\" width=\"30\" height=\"600\" fill=\"none\" stroke=\"#000000\" "
       "stroke-width=\"1\"/>\n";
  s += "<text x=\"755\" y=\"72\" font-family=\"monospace\" font-size=\"14\">1</text>\n";
  s += "<text x=\"755\" y=\"664\" font-family=\"monospace\" font-size=\"14\">0</text>\n";
  s += "<text x=\"725\" y=\"48\" font-family=\"monospace\" font-size=\"14\" "
       "text-anchor=\"middle\">success</text>\n";
  s += "</svg>\n";
  return s;
}

inline void render_heatmap(const PhaseGrid& grid, const std::string& path) {
  const std::string bytes = render_heatmap_svg(grid);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw io_error("cannot open for writing: " + path);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw io_error("write failed: " + path);
}

}  // namespace nncs
