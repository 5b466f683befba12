#include "polyfrac/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace polyfrac {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

nlohmann::json vec_to_json(const Vec3& v, int dim) {
  nlohmann::json j = nlohmann::json::array();
  for (int c = 0; c < dim; ++c) j.push_back(v[c]);
  return j;
}

Vec3 json_to_vec(const nlohmann::json& j) {
  Vec3 v = Vec3::Zero();
  for (std::size_t c = 0; c < j.size() && c < 3; ++c) v[c] = j[c].get<double>();
  return v;
}

}  // namespace

void write_mesh_json(const PolytopalMesh& mesh, const std::vector<FracturePlane>& planes,
                     const std::string& path) {
  nlohmann::json j;
  j["version"] = 1;
  j["dim"] = mesh.dim;
  j["vertices"] = nlohmann::json::array();
  for (const auto& v : mesh.vertices) j["vertices"].push_back(vec_to_json(v, mesh.dim));
  j["cells"] = nlohmann::json::array();
  for (const auto& K : mesh.cells) {
    nlohmann::json cell = nlohmann::json::array();
    for (int f : K.faces) cell.push_back(mesh.faces[f].verts);
    j["cells"].push_back(cell);
  }
  j["fracture_planes"] = nlohmann::json::array();
  for (const auto& p : planes) {
    nlohmann::json pj;
    pj["origin"] = vec_to_json(p.origin, mesh.dim);
    pj["normal"] = vec_to_json(p.normal, mesh.dim);
    if (!p.polygon.empty()) {
      pj["polygon"] = nlohmann::json::array();
      for (const auto& q : p.polygon) pj["polygon"].push_back(vec_to_json(q, mesh.dim));
    }
    j["fracture_planes"].push_back(pj);
  }
  j["boundary_tags"] = nlohmann::json::array();
  for (const auto& F : mesh.faces) {
    if (F.interior() || F.tag == 0) continue;
    nlohmann::json tj;
    tj["tag"] = mesh.tag_names[F.tag];
    tj["vertices"] = F.verts;
    j["boundary_tags"].push_back(tj);
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << j.dump(1) << "\n";
}

PolytopalMesh read_mesh_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  in >> j;
  if (j.at("version").get<int>() != 1) throw std::runtime_error("unsupported mesh file version");
  int dim = j.at("dim").get<int>();
  std::vector<Vec3> coords;
  for (const auto& v : j.at("vertices")) coords.push_back(json_to_vec(v));
  std::vector<std::vector<std::vector<int>>> raw;
  for (const auto& cell : j.at("cells")) {
    std::vector<std::vector<int>> faces;
    for (const auto& f : cell) faces.push_back(f.get<std::vector<int>>());
    raw.push_back(std::move(faces));
  }
  PolytopalMesh mesh = build_connectivity(raw, coords, dim);
  std::vector<FracturePlane> planes;
  if (j.contains("fracture_planes"))
    for (const auto& pj : j["fracture_planes"]) {
      FracturePlane p;
      p.origin = json_to_vec(pj.at("origin"));
      p.normal = json_to_vec(pj.at("normal"));
      if (pj.contains("polygon"))
        for (const auto& q : pj["polygon"]) p.polygon.push_back(json_to_vec(q));
      planes.push_back(std::move(p));
    }
  if (!planes.empty()) tag_fracture(mesh, planes);
  if (j.contains("boundary_tags")) {
    std::map<std::vector<int>, std::string> by_verts;
    for (const auto& tj : j["boundary_tags"]) {
      std::vector<int> key = tj.at("vertices").get<std::vector<int>>();
      std::sort(key.begin(), key.end());
      by_verts[key] = tj.at("tag").get<std::string>();
    }
    set_boundary_tags(mesh, [&](const Face& F) -> std::string {
      std::vector<int> key = F.verts;
      std::sort(key.begin(), key.end());
      auto it = by_verts.find(key);
      return it == by_verts.end() ? std::string() : it->second;
    });
  }
  return mesh;
}

void write_vtu(const PolytopalMesh& mesh, const std::string& path,
               const std::vector<CellVectorField>& fields) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  // exploded connectivity: each cell owns copies of its vertices so
  // discontinuous cellwise fields can be attached to points
  long n_points = 0;
  for (const auto& K : mesh.cells) n_points += static_cast<long>(K.verts.size());

  out << "<?xml version=\"1.0\"?>\n"
      << "<VTKFile type=\"UnstructuredGrid\" version=\"0.1\" byte_order=\"LittleEndian\">\n"
      << "<UnstructuredGrid>\n"
      << "<Piece NumberOfPoints=\"" << n_points << "\" NumberOfCells=\"" << mesh.n_cells()
      << "\">\n";
  out << "<Points><DataArray type=\"Float64\" NumberOfComponents=\"3\" format=\"ascii\">\n";
  for (const auto& K : mesh.cells)
    for (int v : K.verts) {
      const Vec3& x = mesh.vertices[v];
      out << fmt17(x.x()) << " " << fmt17(x.y()) << " " << fmt17(x.z()) << "\n";
    }
  out << "</DataArray></Points>\n";

  std::vector<long> first(mesh.n_cells() + 1, 0);
  for (int c = 0; c < mesh.n_cells(); ++c)
    first[c + 1] = first[c] + static_cast<long>(mesh.cells[c].verts.size());

  out << "<Cells>\n<DataArray type=\"Int64\" Name=\"connectivity\" format=\"ascii\">\n";
  if (mesh.dim == 2) {
    for (int c = 0; c < mesh.n_cells(); ++c) {
      // order the polygon boundary by walking the faces
      const Cell& K = mesh.cells[c];
      std::vector<int> loop;
      loop.push_back(K.face_sign[0] > 0 ? mesh.faces[K.faces[0]].verts[0]
                                        : mesh.faces[K.faces[0]].verts[1]);
      while (loop.size() < K.verts.size()) {
        int cur = loop.back();
        for (std::size_t i = 0; i < K.faces.size(); ++i) {
          const Face& F = mesh.faces[K.faces[i]];
          int a = K.face_sign[i] > 0 ? F.verts[0] : F.verts[1];
          int b = K.face_sign[i] > 0 ? F.verts[1] : F.verts[0];
          if (a == cur && (loop.size() < 2 || b != loop[loop.size() - 2])) {
            loop.push_back(b);
            break;
          }
        }
        if (static_cast<int>(loop.size()) > 2 * static_cast<int>(K.verts.size())) break;
      }
      if (loop.size() > K.verts.size()) loop.resize(K.verts.size());
      for (int v : loop) {
        auto it = std::lower_bound(K.verts.begin(), K.verts.end(), v);
        out << first[c] + (it - K.verts.begin()) << " ";
      }
      out << "\n";
    }
  } else {
    for (int c = 0; c < mesh.n_cells(); ++c) {
      const Cell& K = mesh.cells[c];
      for (std::size_t i = 0; i < K.verts.size(); ++i) out << first[c] + i << " ";
      out << "\n";
    }
  }
  out << "</DataArray>\n<DataArray type=\"Int64\" Name=\"offsets\" format=\"ascii\">\n";
  for (int c = 0; c < mesh.n_cells(); ++c) out << first[c + 1] << " ";
  out << "\n</DataArray>\n<DataArray type=\"UInt8\" Name=\"types\" format=\"ascii\">\n";
  for (int c = 0; c < mesh.n_cells(); ++c) out << (mesh.dim == 2 ? 7 : 42) << " ";
  out << "\n</DataArray>\n";
  if (mesh.dim == 3) {
    out << "<DataArray type=\"Int64\" Name=\"faces\" format=\"ascii\">\n";
    for (int c = 0; c < mesh.n_cells(); ++c) {
      const Cell& K = mesh.cells[c];
      out << K.faces.size() << " ";
      for (int f : K.faces) {
        const Face& F = mesh.faces[f];
        out << F.verts.size() << " ";
        for (int v : F.verts) {
          auto it = std::lower_bound(K.verts.begin(), K.verts.end(), v);
          out << first[c] + (it - K.verts.begin()) << " ";
        }
      }
      out << "\n";
    }
    out << "</DataArray>\n<DataArray type=\"Int64\" Name=\"faceoffsets\" format=\"ascii\">\n";
    long off = 0;
    for (int c = 0; c < mesh.n_cells(); ++c) {
      const Cell& K = mesh.cells[c];
      off += 1;
      for (int f : K.faces) off += 1 + static_cast<long>(mesh.faces[f].verts.size());
      out << off << " ";
    }
    out << "\n</DataArray>\n";
  }
  out << "</Cells>\n";

  out << "<PointData>\n";
  for (const auto& fld : fields) {
    out << "<DataArray type=\"Float64\" Name=\"" << fld.name
        << "\" NumberOfComponents=\"3\" format=\"ascii\">\n";
    for (int c = 0; c < mesh.n_cells(); ++c)
      for (int v : mesh.cells[c].verts) {
        Vec3 val = fld.eval(c, mesh.vertices[v]);
        out << fmt17(val.x()) << " " << fmt17(val.y()) << " " << fmt17(val.z()) << "\n";
      }
    out << "</DataArray>\n";
  }
  out << "</PointData>\n";
  out << "</Piece>\n</UnstructuredGrid>\n</VTKFile>\n";
}

void write_fracture_vtu(const PolytopalMesh& mesh, const std::string& path,
                        const std::vector<FaceData>& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  std::map<int, long> vmap;
  std::vector<int> vlist;
  for (int f : mesh.fracture_faces)
    for (int v : mesh.faces[f].verts)
      if (!vmap.count(v)) {
        vmap[v] = static_cast<long>(vlist.size());
        vlist.push_back(v);
      }
  out << "<?xml version=\"1.0\"?>\n"
      << "<VTKFile type=\"UnstructuredGrid\" version=\"0.1\" byte_order=\"LittleEndian\">\n"
      << "<UnstructuredGrid>\n"
      << "<Piece NumberOfPoints=\"" << vlist.size() << "\" NumberOfCells=\""
      << mesh.fracture_faces.size() << "\">\n";
  out << "<Points><DataArray type=\"Float64\" NumberOfComponents=\"3\" format=\"ascii\">\n";
  for (int v : vlist) {
    const Vec3& x = mesh.vertices[v];
    out << fmt17(x.x()) << " " << fmt17(x.y()) << " " << fmt17(x.z()) << "\n";
  }
  out << "</DataArray></Points>\n<Cells>\n"
      << "<DataArray type=\"Int64\" Name=\"connectivity\" format=\"ascii\">\n";
  for (int f : mesh.fracture_faces) {
    for (int v : mesh.faces[f].verts) out << vmap[v] << " ";
    out << "\n";
  }
  out << "</DataArray>\n<DataArray type=\"Int64\" Name=\"offsets\" format=\"ascii\">\n";
  long off = 0;
  for (int f : mesh.fracture_faces) {
    off += static_cast<long>(mesh.faces[f].verts.size());
    out << off << " ";
  }
  out << "\n</DataArray>\n<DataArray type=\"UInt8\" Name=\"types\" format=\"ascii\">\n";
  for (std::size_t i = 0; i < mesh.fracture_faces.size(); ++i)
    out << (mesh.dim == 2 ? 3 : 7) << " ";
  out << "\n</DataArray>\n</Cells>\n<CellData>\n";
  for (const auto& fd : data) {
    out << "<DataArray type=\"Float64\" Name=\"" << fd.name << "\" NumberOfComponents=\""
        << fd.components << "\" format=\"ascii\">\n";
    for (std::size_t i = 0; i < mesh.fracture_faces.size(); ++i) {
      for (int c = 0; c < fd.components; ++c) out << fmt17(fd.values[fd.components * i + c]) << " ";
      out << "\n";
    }
    out << "</DataArray>\n";
  }
  out << "</CellData>\n</Piece>\n</UnstructuredGrid>\n</VTKFile>\n";
}

void dump_matrix_coordinate(const SpMat& M, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << M.rows() << " " << M.cols() << " " << M.nonZeros() << "\n";
  for (int k = 0; k < M.outerSize(); ++k)
    for (SpMat::InnerIterator it(M, k); it; ++it)
      out << it.row() << " " << it.col() << " " << fmt17(it.value()) << "\n";
}

std::vector<std::vector<double>> ConvergenceReport::eoc() const {
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    std::vector<double> e(columns.size(), 0.0);
    double dh = std::log(rows[i].h / rows[i + 1].h);
    for (std::size_t c = 0; c < columns.size(); ++c)
      e[c] = std::log(rows[i].values[c] / rows[i + 1].values[c]) / dh;
    out.push_back(std::move(e));
  }
  return out;
}

void export_csv(const ConvergenceReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "level,h,n_cells";
  for (const auto& c : report.columns) out << "," << c;
  for (const auto& c : report.columns) out << ",eoc_" << c;
  out << "\n";
  auto eoc = report.eoc();
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& r = report.rows[i];
    out << r.level << "," << fmt17(r.h) << "," << r.n_cells;
    for (double v : r.values) out << "," << fmt17(v);
    for (std::size_t c = 0; c < report.columns.size(); ++c)
      out << "," << (i == 0 ? "nan" : fmt17(eoc[i - 1][c]));
    out << "\n";
  }
}

ConvergenceReport read_csv_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  ConvergenceReport rep;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty report");
  std::vector<std::string> headers;
  {
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t next = line.find(',', pos);
      if (next == std::string::npos) next = line.size();
      headers.push_back(line.substr(pos, next - pos));
      pos = next + 1;
    }
  }
  std::size_t ncols = (headers.size() - 3) / 2;
  for (std::size_t c = 0; c < ncols; ++c) rep.columns.push_back(headers[3 + c]);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> parts;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      std::size_t next = line.find(',', pos);
      if (next == std::string::npos) next = line.size();
      parts.push_back(line.substr(pos, next - pos));
      pos = next + 1;
    }
    ConvergenceReport::Row r;
    r.level = std::stoi(parts[0]);
    r.h = std::stod(parts[1]);
    r.n_cells = std::stol(parts[2]);
    for (std::size_t c = 0; c < ncols; ++c) r.values.push_back(std::stod(parts[3 + c]));
    rep.rows.push_back(std::move(r));
  }
  return rep;
}

}  // namespace polyfrac
