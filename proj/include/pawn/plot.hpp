#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace pawn {

/// Reads one JSON object per non-empty line.
inline std::vector<nlohmann::json> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<nlohmann::json> rows;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return rows;
}

struct Series {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

struct Panel {
  std::string title;
  std::vector<Series> series;
};

/// Groups curve rows into panels: MAE columns share one panel per curve
/// kind, every other numeric column gets its own. x is the epoch.
inline std::vector<Panel> curve_panels(const std::vector<nlohmann::json>& rows) {
  std::map<std::string, std::map<std::string, Series>> panels;  // title -> series name -> series
  std::vector<std::string> order;
  for (const auto& r : rows) {
    if (!r.is_object() || !r.contains("epoch")) continue;
    const std::string kind = r.value("kind", "curve");
    const double x = r["epoch"].get<double>();
    for (const auto& [key, v] : r.items()) {
      if (key == "epoch" || key == "seconds" || !v.is_number()) continue;
      const bool is_mae = key.size() > 7 && key.substr(key.size() - 7) == "_mae_cp";
      const std::string title = kind + (is_mae ? ": MAE (cp)" : ": " + key);
      if (!panels.count(title)) order.push_back(title);
      auto& s = panels[title][key];
      s.name = key;
      s.points.emplace_back(x, v.get<double>());
    }
  }
  std::vector<Panel> out;
  for (const auto& t : order) {
    Panel p{t, {}};
    for (auto& [_, s] : panels[t]) p.series.push_back(s);
    out.push_back(std::move(p));
  }
  return out;
}

/// Line charts stacked vertically, one per panel.
inline std::string render_svg(const std::vector<Panel>& panels) {
  if (panels.empty()) throw std::invalid_argument("nothing to plot");
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"};
  const double w = 640, ph = 260, ml = 70, mr = 20, mt = 30, mb = 40;
  std::ostringstream os;
  os << std::setprecision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << ph * double(panels.size())
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  for (std::size_t pi = 0; pi < panels.size(); ++pi) {
    const auto& p = panels[pi];
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& s : p.series)
      for (auto [x, y] : s.points) {
        if (!std::isfinite(y)) continue;
        x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
      }
    if (x0 > x1) continue;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    const double top = ph * double(pi), iw = w - ml - mr, ih = ph - mt - mb;
    auto sx = [&](double x) { return ml + (x - x0) / (x1 - x0) * iw; };
    auto sy = [&](double y) { return top + mt + (1 - (y - y0) / (y1 - y0)) * ih; };
    os << "<g>\n<text x=\"" << ml << "\" y=\"" << top + 18 << "\" font-weight=\"bold\">" << p.title << "</text>\n";
    os << "<rect x=\"" << ml << "\" y=\"" << top + mt << "\" width=\"" << iw << "\" height=\"" << ih
       << "\" fill=\"none\" stroke=\"#888\"/>\n";
    for (int t = 0; t <= 4; ++t) {
      const double yv = y0 + (y1 - y0) * t / 4, xv = x0 + (x1 - x0) * t / 4;
      os << "<text x=\"" << ml - 6 << "\" y=\"" << sy(yv) + 4 << "\" text-anchor=\"end\">" << yv << "</text>\n";
      os << "<text x=\"" << sx(xv) << "\" y=\"" << top + mt + ih + 16 << "\" text-anchor=\"middle\">" << xv
         << "</text>\n";
    }
    os << "<text x=\"" << ml + iw / 2 << "\" y=\"" << top + ph - 6 << "\" text-anchor=\"middle\">epoch</text>\n";
    for (std::size_t si = 0; si < p.series.size(); ++si) {
      const char* c = kColors[si % 5];
      os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
      for (auto [x, y] : p.series[si].points)
        if (std::isfinite(y)) os << sx(x) << ',' << sy(y) << ' ';
      os << "\"/>\n";
      os << "<text x=\"" << ml + iw - 4 << "\" y=\"" << top + mt + 14 + 14 * double(si) << "\" text-anchor=\"end\" fill=\""
         << c << "\">" << p.series[si].name << "</text>\n";
    }
    os << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace pawn
