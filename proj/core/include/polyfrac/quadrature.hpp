// Degree-2 quadrature over polytopal cells (simplex fans against the cell
// vertex isobarycenter) and faces (triangle fans / Gauss segments), plus a
// subdivided variant used as an independent accuracy oracle.

#ifndef POLYFRAC_QUADRATURE_HPP
#define POLYFRAC_QUADRATURE_HPP

#include <functional>

#include "polyfrac/mesh.hpp"

namespace polyfrac {

namespace quad_detail {

template <class T>
T zero_like();
template <>
inline double zero_like<double>() { return 0.0; }
template <>
inline Vec3 zero_like<Vec3>() { return Vec3::Zero(); }
template <>
inline Mat3 zero_like<Mat3>() { return Mat3::Zero(); }

// degree-2 triangle rule (edge midpoints)
template <class T, class F>
T tri_rule(const Vec3& a, const Vec3& b, const Vec3& c, double area, F&& f) {
  T s = f(Vec3(0.5 * (a + b)));
  s += f(Vec3(0.5 * (b + c)));
  s += f(Vec3(0.5 * (c + a)));
  return T((area / 3.0) * s);
}

// degree-2 tetrahedron rule
template <class T, class F>
T tet_rule(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c, double vol, F&& f) {
  const double al = 0.5854101966249685, be = 0.1381966011250105;
  auto pt = [&](double wp, double wa, double wb, double wc) {
    return Vec3(wp * p + wa * a + wb * b + wc * c);
  };
  T s = f(pt(al, be, be, be));
  s += f(pt(be, al, be, be));
  s += f(pt(be, be, al, be));
  s += f(pt(be, be, be, al));
  return T((vol / 4.0) * s);
}

// degree-3 Gauss segment rule
template <class T, class F>
T seg_rule(const Vec3& a, const Vec3& b, F&& f) {
  const double g = 0.5773502691896258;
  Vec3 m = 0.5 * (a + b), h = 0.5 * (b - a);
  T s = f(Vec3(m - g * h));
  s += f(Vec3(m + g * h));
  return T(0.5 * (b - a).norm() * s);
}

}  // namespace quad_detail

/// Integral of f over cell K (degree-2 exact); `subdivide` >= 1 bisects every
/// fan simplex uniformly that many times for a refined oracle value.
template <class T>
T integrate_cell(const PolytopalMesh& m, int cell, const std::function<T(const Vec3&)>& f,
                 int subdivide = 0) {
  const Cell& K = m.cells[cell];
  Vec3 p = Vec3::Zero();
  for (int v : K.verts) p += m.vertices[v];
  p /= static_cast<double>(K.verts.size());

  T total = quad_detail::zero_like<T>();
  std::function<void(const Vec3&, const Vec3&, const Vec3&, const Vec3&, int)> tet3 =
      [&](const Vec3& q, const Vec3& a, const Vec3& b, const Vec3& c, int lvl) {
        if (lvl <= 0) {
          double vol = std::abs((a - q).cross(b - q).dot(c - q)) / 6.0;
          total += quad_detail::tet_rule<T>(q, a, b, c, vol, f);
          return;
        }
        Vec3 qa = 0.5 * (q + a), qb = 0.5 * (q + b), qc = 0.5 * (q + c);
        Vec3 ab = 0.5 * (a + b), ac = 0.5 * (a + c), bc = 0.5 * (b + c);
        tet3(q, qa, qb, qc, lvl - 1);
        tet3(qa, a, ab, ac, lvl - 1);
        tet3(qb, ab, b, bc, lvl - 1);
        tet3(qc, ac, bc, c, lvl - 1);
        tet3(qa, qb, qc, ac, lvl - 1);
        tet3(qa, qb, ab, ac, lvl - 1);
        tet3(qb, qc, ac, bc, lvl - 1);
        tet3(qb, ab, ac, bc, lvl - 1);
      };
  std::function<void(const Vec3&, const Vec3&, const Vec3&, int)> tri2 =
      [&](const Vec3& q, const Vec3& a, const Vec3& b, int lvl) {
        if (lvl <= 0) {
          Vec3 u = a - q, w = b - q;
          double area = 0.5 * std::abs(u.x() * w.y() - u.y() * w.x());
          total += quad_detail::tri_rule<T>(q, a, b, area, f);
          return;
        }
        Vec3 qa = 0.5 * (q + a), qb = 0.5 * (q + b), ab = 0.5 * (a + b);
        tri2(q, qa, qb, lvl - 1);
        tri2(qa, a, ab, lvl - 1);
        tri2(qb, ab, b, lvl - 1);
        tri2(qa, ab, qb, lvl - 1);
      };

  for (std::size_t i = 0; i < K.faces.size(); ++i) {
    const Face& F = m.faces[K.faces[i]];
    if (m.dim == 3) {
      for (const auto& T3 : F.tris) tet3(p, T3.a, T3.b, T3.c, subdivide);
    } else {
      tri2(p, m.vertices[F.verts[0]], m.vertices[F.verts[1]], subdivide);
    }
  }
  return total;
}

/// Integral of f over face sigma (degree-2 exact on the face triangulation;
/// degree-3 Gauss in 2D).
template <class T>
T integrate_face(const PolytopalMesh& m, int face, const std::function<T(const Vec3&)>& f) {
  const Face& F = m.faces[face];
  if (m.dim == 2)
    return quad_detail::seg_rule<T>(m.vertices[F.verts[0]], m.vertices[F.verts[1]], f);
  T total = quad_detail::zero_like<T>();
  for (const auto& T3 : F.tris)
    total += quad_detail::tri_rule<T>(T3.a, T3.b, T3.c, T3.area, f);
  return total;
}

}  // namespace polyfrac

#endif
