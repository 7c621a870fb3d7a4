#pragma once

#include <string>
#include <utility>
#include <vector>

#include "reslab/domain_carving.hpp"
#include "reslab/types.hpp"

namespace reslab {

struct SvgSeries {
  std::vector<Complex> points;
  std::string color = "#1f6fb2";
  bool closed = false;
};

struct SvgMarker {
  Complex at;
  std::string color = "#d62728";
  double size = 3.0;
};

// Polyline plot in the complex plane, autoscaled, with axes when they
// cross the data box.
std::string svg_plane_plot(const std::vector<SvgSeries>& series,
                           const std::vector<SvgMarker>& markers,
                           const std::string& title);

// Real-axis picture of the region: the interval as a baseline, the
// region's intervals as heavy segments, the truncated cones above them
// as translucent polygons, plus markers.
std::string svg_cone_region(const ConeRegion& region,
                            std::pair<double, double> interval,
                            const std::vector<SvgMarker>& markers,
                            const std::string& title);

}  // namespace reslab
