// Minimal SVG line plots for trajectory and sweep figures.
#ifndef DATASYM_SVG_HPP
#define DATASYM_SVG_HPP

#include <string>
#include <vector>

namespace datasym {

struct SvgSeries {
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  std::string label;
  bool markers = false;
};

struct SvgRect {
  double x0, y0, x1, y1;
  std::string color = "#dddddd";
};

struct SvgPlot {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool logx = false;
  bool logy = false;
  std::vector<SvgSeries> series;
  std::vector<SvgRect> rects;       // drawn behind the series (safe boxes)
  std::vector<double> hlines;       // horizontal guide lines
  double clip_x0 = 0, clip_x1 = 0;  // explicit axis limits when x0 < x1
  double clip_y0 = 0, clip_y1 = 0;

  void save(const std::string& path) const;
  std::string render() const;
};

}  // namespace datasym

#endif
