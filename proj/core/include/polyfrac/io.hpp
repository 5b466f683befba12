// File formats: versioned JSON mesh documents, ASCII VTU exports of the
// volume mesh and of the fracture surface, coordinate-format matrix dumps and
// CSV convergence reports.

#ifndef POLYFRAC_IO_HPP
#define POLYFRAC_IO_HPP

#include <string>
#include <vector>

#include "polyfrac/assembly.hpp"
#include "polyfrac/dof.hpp"
#include "polyfrac/mesh.hpp"

namespace polyfrac {

/// JSON document: {version, dim, vertices, cells (face-vertex lists),
/// fracture_planes, boundary_tags}.
void write_mesh_json(const PolytopalMesh& mesh, const std::vector<FracturePlane>& planes,
                     const std::string& path);
PolytopalMesh read_mesh_json(const std::string& path);

/// ASCII XML unstructured grid; cells exported as polygons / polyhedra.
/// Optional per-cell affine field sampled at the cell's own vertex copies.
struct CellVectorField {
  std::string name;
  std::function<Vec3(int cell, const Vec3& x)> eval;
};
void write_vtu(const PolytopalMesh& mesh, const std::string& path,
               const std::vector<CellVectorField>& fields = {});

/// Fracture surface as its own grid with face-wise data.
struct FaceData {
  std::string name;
  int components = 1;                      // 1 or 3
  std::vector<double> values;              // components per fracture face
};
void write_fracture_vtu(const PolytopalMesh& mesh, const std::string& path,
                        const std::vector<FaceData>& data);

/// (row, col, value) text dump for external verification.
void dump_matrix_coordinate(const SpMat& M, const std::string& path);

/// Convergence report: one row per level, fixed column set, EOC columns
/// appended between consecutive levels.
struct ConvergenceReport {
  std::vector<std::string> columns;  // error column names
  struct Row {
    int level = 0;
    double h = 0;
    long n_cells = 0;
    std::vector<double> values;
  };
  std::vector<Row> rows;

  /// EOC table: eoc[i][c] between rows i and i+1 for column c.
  std::vector<std::vector<double>> eoc() const;
};

void export_csv(const ConvergenceReport& report, const std::string& path);
ConvergenceReport read_csv_report(const std::string& path);

}  // namespace polyfrac

#endif
