// Polytopal mesh conforming to a planar fracture network: connectivity,
// geometry (areas, centroids, normals, diameters, face triangulations),
// fracture tagging with oriented plus/minus sides, and vertex side classes
// (one nodal unknown per local connected component of the matrix around a
// vertex).
//
// Meshes are immutable once built; construction is single-threaded, reads
// are safe to share.

#ifndef POLYFRAC_MESH_HPP
#define POLYFRAC_MESH_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace polyfrac {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Triangle of a face fan; carries its own area and unit normal so that
/// non-planar (barycentric) faces integrate exactly over their triangulation.
struct FaceTri {
  Vec3 a, b, c;
  double area;
  Vec3 normal;  // oriented like the parent face
  Vec3 centroid() const { return (a + b + c) / 3.0; }
};

struct Face {
  std::vector<int> verts;           // cyclic, CCW w.r.t. `normal`
  std::array<int, 2> cells{-1, -1}; // cells[0] sees `normal` as outward
  double area = 0;
  double diam = 0;
  Vec3 centroid = Vec3::Zero();
  Vec3 normal = Vec3::Zero();       // area-weighted mean for non-planar faces
  bool planar = true;
  Vec3 fan_center = Vec3::Zero();   // vertex isobarycenter
  std::vector<FaceTri> tris;        // fan; tris[i] spans edge (verts[i], verts[i+1]); one entry in 2D
  bool on_fracture = false;
  int component = -1;               // fracture component index
  int tag = 0;                      // boundary tag id (0 = untagged/interior)

  bool interior() const { return cells[1] >= 0; }
};

struct Cell {
  std::vector<int> faces;
  std::vector<int> face_sign;       // +1 if the face normal is outward of this cell
  std::vector<int> verts;           // unique, ascending
  double volume = 0;
  double diam = 0;
  Vec3 centroid = Vec3::Zero();
};

/// One nodal unknown: the cells of M_s lying on the same side of the fracture
/// network in a neighborhood of the vertex.
struct SideClass {
  int vertex = -1;
  int rep_cell = -1;                // smallest member id
  std::vector<int> cells;           // ascending
  int side_label = 0;               // +1 plus side, -1 minus side, 0 off-fracture
};

/// Planar polygon describing one fracture plane; interior faces lying on the
/// plane (and inside the optional convex fence) are tagged. `normal` fixes
/// the plus-side orientation n+ of the matching component(s).
struct FracturePlane {
  Vec3 origin = Vec3::Zero();
  Vec3 normal = Vec3::Zero();
  std::vector<Vec3> polygon;        // empty = whole plane
};

struct RegularityMetrics {
  double min_inradius_ratio;        // min over cells of (estimated inscribed radius)/h_K
  double max_cell_face_ratio;       // max over cells of h_K / min incident face diameter
  double min_face_area;
  double min_cell_volume;
};

class PolytopalMesh {
public:
  int dim = 3;
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 2>> edges;  // 3D only; sorted pairs
  std::vector<Face> faces;
  std::vector<Cell> cells;

  std::vector<int> fracture_faces;        // ascending face ids
  int n_fracture_components = 0;
  std::vector<Vec3> component_normal;     // n+ per component

  std::vector<std::vector<int>> vertex_cells;        // M_s, ascending
  std::vector<std::vector<SideClass>> vertex_classes;
  std::vector<char> vertex_on_gamma;      // vertex lies on the closure of the fracture

  std::vector<std::string> tag_names;     // tag id -> name; id 0 reserved for "untagged"

  double h_max = 0;
  Vec3 bbox_min = Vec3::Zero(), bbox_max = Vec3::Zero();

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_faces() const { return static_cast<int>(faces.size()); }
  int n_cells() const { return static_cast<int>(cells.size()); }

  /// Index into vertex_classes[s] of the class containing cell K.
  int class_of(int cell, int vertex) const;

  /// Outward unit normal of face f seen from cell K (planar faces).
  Vec3 outward_normal(int cell, int face) const;

  /// In-plane outward unit normal of edge i (between verts[i] and verts[i+1])
  /// of a planar face. In 2D the face "edges" degenerate to its endpoints and
  /// the normals are the outward tangents (-t at endpoint 0, +t at endpoint 1,
  /// queried as i = 0, 1).
  Vec3 face_edge_normal(int face, int i) const;

  int boundary_tag_id(const std::string& name) const;

  RegularityMetrics regularity() const;

  /// Closed-surface identities: max over cells of |sum_T |T| n_T| / h_K^{d-1}
  /// and the in-plane face analogue; both sit at roundoff on valid meshes.
  double max_cell_closure_defect() const;
  double max_face_closure_defect() const;

  void rebuild_side_classes();

private:
  // per vertex: (cell, class index) pairs sorted by cell
  std::vector<std::vector<std::pair<int, int>>> cell_class_lookup_;
};

/// Build full incidence and geometry from per-cell face vertex loops.
/// Faces may come in arbitrary per-cell orientation as long as each cell
/// boundary is consistently orientable; interior faces must be shared by
/// exactly two cells.
PolytopalMesh build_connectivity(const std::vector<std::vector<std::vector<int>>>& raw_cells,
                                 const std::vector<Vec3>& coords, int dim);

/// Tag the faces lying on the given planes as fracture faces, orient each
/// component so the stored face normal equals n+, and rebuild side classes.
void tag_fracture(PolytopalMesh& mesh, const std::vector<FracturePlane>& planes);

/// Assign boundary tags from a face -> name map (empty name = untagged).
void set_boundary_tags(PolytopalMesh& mesh,
                       const std::function<std::string(const Face&)>& namer);

/// Side classes of one vertex, recomputed from scratch (used directly and as
/// the reference for the stored classes).
std::vector<SideClass> vertex_side_classes(const PolytopalMesh& mesh, int vertex);

// ---- generators ------------------------------------------------------------

struct Box {
  Vec3 lo = Vec3::Zero(), hi = Vec3::Zero();
};

enum class NonPlanarRepair { Cut, Bary };

/// Uniform Cartesian grid; dim deduced from the box (hi.z == lo.z -> 2D).
PolytopalMesh generate_cartesian(const std::array<int, 3>& n, const Box& box);

/// Each Cartesian cell split into 6 tetrahedra, consistent across faces.
PolytopalMesh generate_tet(const std::array<int, 3>& n, const Box& box);

/// Random perturbation of the interior nodes of a Cartesian grid, leaving
/// boundary nodes and nodes on the given fracture planes untouched.
/// Non-planar quadrilateral faces are repaired by Cut (two triangles,
/// diagonal through the lexicographically smallest vertex id) or Bary (face
/// kept non-planar, isobarycenter fan drives the modified gradient).
PolytopalMesh generate_perturbed_hexa(const std::array<int, 3>& n, const Box& box,
                                      double amplitude, NonPlanarRepair repair,
                                      std::uint64_t seed,
                                      const std::vector<FracturePlane>& fracture_planes = {});

struct GradedTriOptions {
  double hmin;            // cell size along the fracture
  double grading = 1.0;   // target size grows like grading * distance
  int base_cells = 125;   // base grid per direction
};

/// Graded conforming triangular mesh of a square containing the interior
/// segment fracture {y = 0, |x| <= frac_half_length}: quadtree-forest
/// refinement toward the segment, 2:1 balanced, leaves split into triangles
/// (hanging vertices handled by center fans). The fracture is resolved by
/// equal edges of length hmin.
PolytopalMesh generate_graded_triangular(const Box& box, double frac_half_length,
                                         const GradedTriOptions& opts);

}  // namespace polyfrac

#endif
