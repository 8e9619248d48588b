#pragma once

namespace canopy {

/// Web Mercator meters-per-pixel at a latitude and zoom level:
/// 156543.03392 * cos(latitude) / 2^zoom. Valid for |latitude| < 85.05 and
/// zoom in [0, 22].
double ground_resolution(double latitude_deg, int zoom);

}  // namespace canopy
