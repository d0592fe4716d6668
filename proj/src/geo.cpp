#include "geocell/geo.hpp"

#include <cmath>

#include "geocell/errors.hpp"

namespace geocell {

namespace {

double wrap_lon(double lon) {
    double w = std::fmod(lon + 180.0, 360.0);
    if (w < 0.0) w += 360.0;
    return w - 180.0;  // [-180, 180)
}

}  // namespace

GeoPoint GeoPoint::normalized() const {
    if (lat_deg >= -90.0 && lat_deg <= 90.0 && lon_deg >= -180.0 && lon_deg < 180.0) {
        return *this;  // canonical values pass through bit-exactly
    }
    double lat = std::fmod(lat_deg, 360.0);
    if (lat > 180.0) lat -= 360.0;
    if (lat < -180.0) lat += 360.0;
    double lon = lon_deg;
    if (lat > 90.0) {
        lat = 180.0 - lat;
        lon += 180.0;
    } else if (lat < -90.0) {
        lat = -180.0 - lat;
        lon += 180.0;
    }
    return {lat, wrap_lon(lon)};
}

double UnitVector::norm() const { return std::sqrt(x * x + y * y + z * z); }

UnitVector latlon_to_unit(const GeoPoint& p) {
    if (!std::isfinite(p.lat_deg) || !std::isfinite(p.lon_deg)) {
        throw InvalidCoordinate("latlon_to_unit: non-finite coordinate");
    }
    GeoPoint n = p.normalized();
    double phi = deg2rad(n.lat_deg);
    double lam = deg2rad(n.lon_deg);
    double c = std::cos(phi);
    return {c * std::cos(lam), c * std::sin(lam), std::sin(phi)};
}

GeoPoint unit_to_latlon(const UnitVector& v) {
    double lat = rad2deg(std::atan2(v.z, std::hypot(v.x, v.y)));
    double lon = rad2deg(std::atan2(v.y, v.x));
    return GeoPoint{lat, lon}.normalized();
}

double great_circle_km(const GeoPoint& a, const GeoPoint& b) {
    UnitVector va = latlon_to_unit(a);
    UnitVector vb = latlon_to_unit(b);
    UnitVector cr = va.cross(vb);
    double angle = std::atan2(cr.norm(), va.dot(vb));
    return kEarthRadiusKm * angle;
}

}  // namespace geocell
