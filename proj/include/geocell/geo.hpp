#pragma once

#include <string>

namespace geocell {

// Mean Earth radius. All distances in this library are great-circle
// kilometres on a perfect sphere of this radius.
inline constexpr double kEarthRadiusKm = 6371.0;

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * (kPi / 180.0); }
inline double rad2deg(double r) { return r * (180.0 / kPi); }

// Geographic coordinate in degrees. Canonical ranges are lat in [-90, +90]
// and lon in [-180, +180); normalized() folds arbitrary finite inputs into
// them (latitudes beyond a pole reflect and flip the longitude).
struct GeoPoint {
    double lat_deg = 0.0;
    double lon_deg = 0.0;

    GeoPoint normalized() const;

    bool operator==(const GeoPoint&) const = default;
};

// Point on the unit sphere, |v| = 1 up to rounding.
struct UnitVector {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double dot(const UnitVector& o) const { return x * o.x + y * o.y + z * o.z; }
    UnitVector cross(const UnitVector& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const;
};

// Geographic convention: (0,0) -> (1,0,0), north pole -> (0,0,1), longitude
// grows eastward. Throws InvalidCoordinate on non-finite input.
UnitVector latlon_to_unit(const GeoPoint& p);

GeoPoint unit_to_latlon(const UnitVector& v);

// Great-circle distance in km. Computed from unit vectors with atan2, which
// stays accurate for both nearby and antipodal points.
double great_circle_km(const GeoPoint& a, const GeoPoint& b);

}  // namespace geocell
