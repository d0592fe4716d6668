#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include "geocell/geo.hpp"

namespace geocell {

// Hierarchical cell on the sphere, identified by a cube face and a quad-tree
// digit path.
//
// Geometry convention: the sphere is enclosed by a cube whose six faces are
// each covered by a quad-tree. A cell of level L is a dyadic square
// [s_lo, s_hi) x [t_lo, t_hi) of side 2^-L in face-local (s, t) in [0, 1]^2.
// (s, t) maps to cube coordinates (u, v) in [-1, 1]^2 through a per-axis
// quadratic transform chosen to keep projected cell areas close to uniform
// (max/min area ratio about 2.08 at fine levels, vs ~5.2 for the linear map),
// and (face, u, v) projects radially onto the sphere. Lines of constant u or
// v lie in central planes, so cell edges are great-circle arcs and each cell
// is a geodesic quadrilateral.
//
// Containment is half-open in (s, t) per axis, closed at the s=1 / t=1 face
// edges, and points on cube edges belong to the face chosen by a fixed
// axis-priority rule (x, then y, then z). Every point on the sphere is
// therefore contained in exactly one cell per level.
//
// Token format: "<face>-<digits>", e.g. "3-021". The root cell of face 3 is
// "3-". Digit d encodes the child quadrant: bit 0 is the s half, bit 1 the
// t half.
class CellId {
  public:
    static constexpr int kMaxLevel = 30;

    CellId() = default;  // root cell of face 0

    static CellId face_root(int face);

    // Cell of the given level containing p. Throws InvalidLevel when level is
    // outside [0, kMaxLevel], InvalidCoordinate on non-finite points.
    static CellId from_point(const GeoPoint& p, int level);

    // Parses a token; throws ParseError on malformed input.
    static CellId from_token(std::string_view token);

    int face() const { return face_; }
    int level() const { return level_; }

    // digit at depth i, 0-based from the root; requires 0 <= i < level()
    int digit(int i) const { return static_cast<int>((path_ >> (2 * (level_ - 1 - i))) & 3u); }

    CellId parent() const;     // requires level() > 0
    CellId child(int d) const; // requires d in [0,3] and level() < kMaxLevel

    // true when this cell is a strict ancestor of other
    bool is_ancestor_of(const CellId& other) const;

    bool contains(const GeoPoint& p) const;

    // The (s, t) midpoint of the cell square projected to the sphere.
    GeoPoint center() const;

    // Exact geodesic-quadrilateral solid angle.
    double area_steradians() const;

    // Corner k of the cell on the unit sphere, counter-clockwise from
    // (s_lo, t_lo).
    UnitVector vertex(int k) const;

    void st_bounds(double& s_lo, double& s_hi, double& t_lo, double& t_hi) const;

    std::string token() const;

    // Unique 64-bit key (face, level and path), suitable for hash maps.
    std::uint64_t packed() const {
        return (static_cast<std::uint64_t>(face_) << 61) |
               (path_ << (61 - 2 * level_)) | (1ull << (60 - 2 * level_));
    }

    bool operator==(const CellId& o) const {
        return face_ == o.face_ && level_ == o.level_ && path_ == o.path_;
    }

    // Lexicographic by token; ancestors sort before descendants.
    bool operator<(const CellId& o) const;

  private:
    CellId(int face, int level, std::uint64_t path)
        : face_(static_cast<std::uint8_t>(face)),
          level_(static_cast<std::uint8_t>(level)),
          path_(path) {}

    std::uint8_t face_ = 0;
    std::uint8_t level_ = 0;
    std::uint64_t path_ = 0;  // digit i in bits [2*(level-1-i), +2)
};

namespace detail {

// Face-local projection pieces, exposed for tests.

// quadratic transform between subdivision coordinate s in [0,1] and cube
// coordinate u in [-1,1]
double uv_from_st(double s);
double st_from_uv(double u);

UnitVector face_uv_to_xyz(int face, double u, double v);

// face owning the direction (x,y,z) under the axis-priority rule, plus its
// local (u, v)
int xyz_to_face_uv(const UnitVector& p, double& u, double& v);

}  // namespace detail

}  // namespace geocell
