#pragma once

// Minimal SVG chart of one site's offered, observed and capacity series.

#include <algorithm>
#include <sstream>
#include <string>

#include "replay.hpp"

namespace anycast {

inline std::string render_site_svg(const ScenarioReport& r, const std::string& site) {
  constexpr double W = 800, H = 300, pad = 40;
  double tmax = 1, ymax = 1;
  for (const auto& s : r.timeline) {
    tmax = std::max(tmax, s.t);
    if (auto it = s.sites.find(site); it != s.sites.end())
      ymax = std::max({ymax, it->second.offered, it->second.capacity, it->second.estimated_offered});
  }
  ymax *= 1.1;
  auto x = [&](double t) { return pad + (W - 2 * pad) * t / tmax; };
  auto y = [&](double v) { return H - pad - (H - 2 * pad) * v / ymax; };
  auto series = [&](auto get, const char* color, const char* dash) {
    std::ostringstream os;
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-dasharray=\"" << dash << "\" points=\"";
    for (const auto& s : r.timeline)
      if (auto it = s.sites.find(site); it != s.sites.end()) os << x(s.t) << ',' << y(get(it->second)) << ' ';
    os << "\"/>\n";
    return os.str();
  };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const auto& s : r.timeline)
    if (auto it = s.sites.find(site); it != s.sites.end() && it->second.overload)
      os << "<rect x=\"" << x(s.t) << "\" y=\"" << pad << "\" width=\"" << (W - 2 * pad) * r.tick / tmax
         << "\" height=\"" << H - 2 * pad << "\" fill=\"#fdd\"/>\n";
  for (const auto& a : r.actions)
    os << "<line x1=\"" << x(a.effective_at) << "\" x2=\"" << x(a.effective_at) << "\" y1=\"" << pad << "\" y2=\""
       << H - pad << "\" stroke=\"#888\"/><text x=\"" << x(a.effective_at) + 2 << "\" y=\"" << pad + 12
       << "\" font-size=\"10\">" << a.policy_id << "</text>\n";
  os << series([](const SiteTick& t) { return t.capacity; }, "black", "4,3");
  os << series([](const SiteTick& t) { return t.offered; }, "red", "none");
  os << series([](const SiteTick& t) { return t.observed; }, "blue", "none");
  os << series([](const SiteTick& t) { return t.estimated_offered; }, "orange", "2,2");
  os << "<text x=\"" << pad << "\" y=\"20\" font-size=\"14\">" << site
     << " (red offered, blue observed, orange estimate, dashed capacity)</text>\n";
  os << "<text x=\"" << W - pad << "\" y=\"" << H - 10 << "\" font-size=\"10\" text-anchor=\"end\">t=" << tmax
     << "s</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace anycast
