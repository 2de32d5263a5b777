#include "datasym/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "datasym/types.hpp"

namespace datasym {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

std::string SvgPlot::render() const {
  const double W = 640, H = 420;
  const double ml = 70, mr = 20, mt = 36, mb = 48;

  auto tx = [this](double v) { return logx ? std::log10(std::max(v, 1e-300)) : v; };
  auto ty = [this](double v) { return logy ? std::log10(std::max(v, 1e-300)) : v; };

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0;
  double y0 = x0, y1 = -x0;
  if (clip_x0 < clip_x1) {
    x0 = tx(clip_x0);
    x1 = tx(clip_x1);
  }
  if (clip_y0 < clip_y1) {
    y0 = ty(clip_y0);
    y1 = ty(clip_y1);
  }
  if (!(x0 < x1) || !(y0 < y1)) {
    for (const auto& s : series)
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (clip_x0 >= clip_x1) {
          x0 = std::min(x0, tx(s.x[i]));
          x1 = std::max(x1, tx(s.x[i]));
        }
        if (clip_y0 >= clip_y1) {
          y0 = std::min(y0, ty(s.y[i]));
          y1 = std::max(y1, ty(s.y[i]));
        }
      }
    for (double h : hlines) {
      y0 = std::min(y0, ty(h));
      y1 = std::max(y1, ty(h));
    }
    if (!(x0 < x1)) {
      x0 -= 1;
      x1 += 1;
    }
    if (!(y0 < y1)) {
      y0 -= 1;
      y1 += 1;
    }
    const double px = 0.04 * (x1 - x0), py = 0.06 * (y1 - y0);
    x0 -= px;
    x1 += px;
    y0 -= py;
    y1 += py;
  }

  auto sx = [&](double v) { return ml + (tx(v) - x0) / (x1 - x0) * (W - ml - mr); };
  auto sy = [&](double v) { return H - mb - (ty(v) - y0) / (y1 - y0) * (H - mt - mb); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (const auto& r : rects) {
    const double rx0 = sx(r.x0), rx1 = sx(r.x1);
    const double ry0 = sy(r.y1), ry1 = sy(r.y0);
    os << "<rect x=\"" << fmt(rx0) << "\" y=\"" << fmt(ry0) << "\" width=\"" << fmt(rx1 - rx0)
       << "\" height=\"" << fmt(ry1 - ry0) << "\" fill=\"" << r.color
       << "\" fill-opacity=\"0.5\" stroke=\"#888888\"/>\n";
  }

  // Axes frame and tick labels at the extremes plus midpoints.
  os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr << "\" height=\""
     << H - mt - mb << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double fx = x0 + (x1 - x0) * t / 4.0;
    const double fy = y0 + (y1 - y0) * t / 4.0;
    const double px = ml + (W - ml - mr) * t / 4.0;
    const double py = H - mb - (H - mt - mb) * t / 4.0;
    const std::string lx = logx ? ("1e" + fmt(fx)) : fmt(fx);
    const std::string lyv = logy ? ("1e" + fmt(fy)) : fmt(fy);
    os << "<text x=\"" << fmt(px) << "\" y=\"" << H - mb + 18
       << "\" font-size=\"11\" text-anchor=\"middle\">" << lx << "</text>\n";
    os << "<text x=\"" << ml - 8 << "\" y=\"" << fmt(py + 4)
       << "\" font-size=\"11\" text-anchor=\"end\">" << lyv << "</text>\n";
  }

  for (double h : hlines)
    os << "<line x1=\"" << ml << "\" y1=\"" << fmt(sy(h)) << "\" x2=\"" << W - mr << "\" y2=\""
       << fmt(sy(h)) << "\" stroke=\"#cc3333\" stroke-dasharray=\"6 3\"/>\n";

  for (const auto& s : series) {
    if (s.x.empty()) continue;
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.4\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) os << fmt(sx(s.x[i])) << "," << fmt(sy(s.y[i])) << " ";
    os << "\"/>\n";
    if (s.markers)
      for (std::size_t i = 0; i < s.x.size(); ++i)
        os << "<circle cx=\"" << fmt(sx(s.x[i])) << "\" cy=\"" << fmt(sy(s.y[i]))
           << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
  }

  double ly = mt + 14;
  for (const auto& s : series) {
    if (s.label.empty()) continue;
    os << "<line x1=\"" << W - mr - 150 << "\" y1=\"" << fmt(ly - 4) << "\" x2=\"" << W - mr - 126
       << "\" y2=\"" << fmt(ly - 4) << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << W - mr - 120 << "\" y=\"" << fmt(ly) << "\" font-size=\"11\">" << s.label
       << "</text>\n";
    ly += 16;
  }

  os << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"20\" font-size=\"13\" text-anchor=\"middle\">"
     << title << "</text>\n";
  os << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 10
     << "\" font-size=\"12\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  os << "<text x=\"16\" y=\"" << (mt + H - mb) / 2 << "\" font-size=\"12\" text-anchor=\"middle\" "
     << "transform=\"rotate(-90 16 " << (mt + H - mb) / 2 << ")\">" << ylabel << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

void SvgPlot::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("svg: cannot write " + path);
  out << render();
}

}  // namespace datasym
