#include "canopy/data/mercator.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace canopy {

double ground_resolution(double latitude_deg, int zoom) {
  if (zoom < 0 || zoom > 22) {
    throw std::invalid_argument("ground_resolution: zoom must be in [0,22], got " +
                                std::to_string(zoom));
  }
  if (std::fabs(latitude_deg) >= 85.05) {
    throw std::invalid_argument("ground_resolution: latitude " + std::to_string(latitude_deg) +
                                " outside Web Mercator validity (|lat| < 85.05)");
  }
  const double rad = latitude_deg * 3.14159265358979323846 / 180.0;
  return 156543.03392 * std::cos(rad) / std::pow(2.0, zoom);
}

}  // namespace canopy
