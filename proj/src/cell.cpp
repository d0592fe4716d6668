#include "geocell/cell.hpp"

#include <cmath>

#include "geocell/errors.hpp"

namespace geocell {

namespace detail {

double uv_from_st(double s) {
    if (s >= 0.5) return (1.0 / 3.0) * (4.0 * s * s - 1.0);
    return (1.0 / 3.0) * (1.0 - 4.0 * (1.0 - s) * (1.0 - s));
}

double st_from_uv(double u) {
    if (u >= 0.0) return 0.5 * std::sqrt(1.0 + 3.0 * u);
    return 1.0 - 0.5 * std::sqrt(1.0 - 3.0 * u);
}

UnitVector face_uv_to_xyz(int face, double u, double v) {
    double x, y, z;
    switch (face) {
        case 0: x = 1;  y = u;  z = v;  break;
        case 1: x = -u; y = 1;  z = v;  break;
        case 2: x = -u; y = -v; z = 1;  break;
        case 3: x = -1; y = -v; z = -u; break;
        case 4: x = v;  y = -1; z = -u; break;
        default: x = v; y = u;  z = -1; break;  // face 5
    }
    double n = std::sqrt(x * x + y * y + z * z);
    return {x / n, y / n, z / n};
}

int xyz_to_face_uv(const UnitVector& p, double& u, double& v) {
    // Largest absolute component wins; on ties the earlier axis (x before y
    // before z) keeps the point, which fixes face ownership on cube edges.
    int axis = 0;
    double best = std::fabs(p.x);
    if (std::fabs(p.y) > best) { axis = 1; best = std::fabs(p.y); }
    if (std::fabs(p.z) > best) { axis = 2; }
    double comp = (axis == 0) ? p.x : (axis == 1) ? p.y : p.z;
    int face = axis + (comp < 0.0 ? 3 : 0);
    switch (face) {
        case 0: u = p.y / p.x;  v = p.z / p.x;  break;
        case 1: u = -p.x / p.y; v = p.z / p.y;  break;
        case 2: u = -p.x / p.z; v = -p.y / p.z; break;
        case 3: u = p.z / p.x;  v = p.y / p.x;  break;
        case 4: u = p.z / p.y;  v = -p.x / p.y; break;
        default: u = -p.y / p.z; v = -p.x / p.z; break;  // face 5
    }
    return face;
}

namespace {

// Solid angle of the geodesic triangle (a, b, c) via the Van Oosterom-
// Strackee formula; orientation-independent.
double triangle_solid_angle(const UnitVector& a, const UnitVector& b, const UnitVector& c) {
    double triple = a.dot(b.cross(c));
    double denom = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
    return std::fabs(2.0 * std::atan2(triple, denom));
}

}  // namespace

}  // namespace detail

CellId CellId::face_root(int face) {
    if (face < 0 || face > 5) throw InvalidArgument("face_root: face out of range");
    return CellId(face, 0, 0);
}

CellId CellId::from_point(const GeoPoint& p, int level) {
    if (level < 0 || level > kMaxLevel) {
        throw InvalidLevel("from_point: level out of [0, 30]");
    }
    double u, v;
    int face = detail::xyz_to_face_uv(latlon_to_unit(p), u, v);
    double s = detail::st_from_uv(u);
    double t = detail::st_from_uv(v);
    // Index per axis at the target level; the clamp realizes the closed upper
    // face edge (s = 1 belongs to the last cell).
    std::uint64_t n = 1ull << level;
    auto cell_index = [&](double c) {
        auto i = static_cast<std::int64_t>(std::floor(c * static_cast<double>(n)));
        if (i < 0) i = 0;
        if (i >= static_cast<std::int64_t>(n)) i = static_cast<std::int64_t>(n) - 1;
        return static_cast<std::uint64_t>(i);
    };
    std::uint64_t i = cell_index(s);
    std::uint64_t j = cell_index(t);
    std::uint64_t path = 0;
    for (int l = level - 1; l >= 0; --l) {
        std::uint64_t d = (((j >> l) & 1u) << 1) | ((i >> l) & 1u);
        path = (path << 2) | d;
    }
    return CellId(face, level, path);
}

CellId CellId::from_token(std::string_view token) {
    if (token.size() < 2 || token[0] < '0' || token[0] > '5' || token[1] != '-') {
        throw ParseError("cell token must look like \"F-digits\"");
    }
    std::string_view digits = token.substr(2);
    if (digits.size() > kMaxLevel) throw ParseError("cell token deeper than level 30");
    std::uint64_t path = 0;
    for (char c : digits) {
        if (c < '0' || c > '3') throw ParseError("cell token digit outside {0,1,2,3}");
        path = (path << 2) | static_cast<std::uint64_t>(c - '0');
    }
    return CellId(token[0] - '0', static_cast<int>(digits.size()), path);
}

CellId CellId::parent() const {
    if (level_ == 0) throw InvalidLevel("parent: root cell has no parent");
    return CellId(face_, level_ - 1, path_ >> 2);
}

CellId CellId::child(int d) const {
    if (d < 0 || d > 3) throw InvalidArgument("child: digit outside {0,1,2,3}");
    if (level_ >= kMaxLevel) throw InvalidLevel("child: already at max level");
    return CellId(face_, level_ + 1, (path_ << 2) | static_cast<std::uint64_t>(d));
}

bool CellId::is_ancestor_of(const CellId& other) const {
    if (face_ != other.face_ || level_ >= other.level_) return false;
    return (other.path_ >> (2 * (other.level_ - level_))) == path_;
}

void CellId::st_bounds(double& s_lo, double& s_hi, double& t_lo, double& t_hi) const {
    std::uint64_t i = 0, j = 0;
    for (int d = 0; d < level_; ++d) {
        int dig = digit(d);
        i = (i << 1) | static_cast<std::uint64_t>(dig & 1);
        j = (j << 1) | static_cast<std::uint64_t>((dig >> 1) & 1);
    }
    double size = std::ldexp(1.0, -level_);  // exact dyadic
    s_lo = static_cast<double>(i) * size;
    s_hi = static_cast<double>(i + 1) * size;
    t_lo = static_cast<double>(j) * size;
    t_hi = static_cast<double>(j + 1) * size;
}

bool CellId::contains(const GeoPoint& p) const {
    double u, v;
    int face = detail::xyz_to_face_uv(latlon_to_unit(p), u, v);
    if (face != face_) return false;
    double s = detail::st_from_uv(u);
    double t = detail::st_from_uv(v);
    double s_lo, s_hi, t_lo, t_hi;
    st_bounds(s_lo, s_hi, t_lo, t_hi);
    bool in_s = (s >= s_lo && s < s_hi) || (s_hi == 1.0 && s == 1.0);
    bool in_t = (t >= t_lo && t < t_hi) || (t_hi == 1.0 && t == 1.0);
    return in_s && in_t;
}

GeoPoint CellId::center() const {
    double s_lo, s_hi, t_lo, t_hi;
    st_bounds(s_lo, s_hi, t_lo, t_hi);
    double u = detail::uv_from_st(0.5 * (s_lo + s_hi));
    double v = detail::uv_from_st(0.5 * (t_lo + t_hi));
    return unit_to_latlon(detail::face_uv_to_xyz(face_, u, v));
}

UnitVector CellId::vertex(int k) const {
    double s_lo, s_hi, t_lo, t_hi;
    st_bounds(s_lo, s_hi, t_lo, t_hi);
    // counter-clockwise: (lo,lo), (hi,lo), (hi,hi), (lo,hi)
    double s = (k == 1 || k == 2) ? s_hi : s_lo;
    double t = (k >= 2) ? t_hi : t_lo;
    return detail::face_uv_to_xyz(face_, detail::uv_from_st(s), detail::uv_from_st(t));
}

double CellId::area_steradians() const {
    UnitVector v0 = vertex(0), v1 = vertex(1), v2 = vertex(2), v3 = vertex(3);
    return detail::triangle_solid_angle(v0, v1, v2) + detail::triangle_solid_angle(v0, v2, v3);
}

std::string CellId::token() const {
    std::string t;
    t.reserve(static_cast<std::size_t>(level_) + 2);
    t.push_back(static_cast<char>('0' + face_));
    t.push_back('-');
    for (int i = 0; i < level_; ++i) t.push_back(static_cast<char>('0' + digit(i)));
    return t;
}

bool CellId::operator<(const CellId& o) const {
    if (face_ != o.face_) return face_ < o.face_;
    int common = level_ < o.level_ ? level_ : o.level_;
    for (int i = 0; i < common; ++i) {
        int a = digit(i), b = o.digit(i);
        if (a != b) return a < b;
    }
    return level_ < o.level_;
}

}  // namespace geocell
