// SPDX-License-Identifier: Apache-2.0
#include "mvem/mesh.hpp"

#include "mvem/error.hpp"
#include "mvem/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace mvem {

namespace {

std::string face_tag(int f) { return "face " + std::to_string(f); }
std::string cell_tag(int c) { return "cell " + std::to_string(c); }

double max_pair_distance(std::span<const int> ids, std::span<const Vec3> vertices) {
  double d = 0.0;
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t j = i + 1; j < ids.size(); ++j)
      d = std::max(d, (vertices[ids[i]] - vertices[ids[j]]).norm());
  return d;
}

}  // namespace

PolyMesh::PolyMesh(std::vector<Vec3> vertices, std::vector<std::vector<int>> faces,
                   std::vector<std::vector<CellFace>> cells)
    : vertices_(std::move(vertices)), faces_(std::move(faces)), cells_(std::move(cells)) {
  const int nv = num_vertices();
  for (int f = 0; f < num_faces(); ++f) {
    const auto& loop = faces_[f];
    if (loop.size() < 3) throw MeshError(face_tag(f) + " has fewer than 3 vertices");
    for (int v : loop)
      if (v < 0 || v >= nv) throw MeshError(face_tag(f) + " references vertex out of range");
    std::vector<int> sorted(loop);
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw MeshError(face_tag(f) + " repeats a vertex");
  }

  face_cells_.assign(faces_.size(), {-1, -1});
  std::vector<int> uses(faces_.size(), 0);
  std::vector<int> first_sign(faces_.size(), 0);
  for (int c = 0; c < num_cells(); ++c) {
    if (cells_[c].size() < 4) throw MeshError(cell_tag(c) + " has fewer than 4 faces");
    for (const auto& [f, sign] : cells_[c]) {
      if (f < 0 || f >= num_faces()) throw MeshError(cell_tag(c) + " references face out of range");
      if (sign != 1 && sign != -1) throw MeshError(cell_tag(c) + " has an orientation sign other than +-1");
      if (++uses[f] > 2) throw MeshError(face_tag(f) + " is referenced by more than two cells");
      if (uses[f] == 1) {
        first_sign[f] = sign;
        face_cells_[f][0] = c;
      } else {
        if (sign == first_sign[f])
          throw MeshError(face_tag(f) + " is seen with the same orientation by both of its cells");
        if (face_cells_[f][0] == c) throw MeshError(face_tag(f) + " appears twice in " + cell_tag(c));
        face_cells_[f][1] = c;
      }
    }
  }
  for (int f = 0; f < num_faces(); ++f) {
    if (uses[f] == 0) throw MeshError(face_tag(f) + " is not referenced by any cell");
    // keep the cell that sees the stored normal as outward in slot 0
    if (uses[f] == 2 && first_sign[f] < 0) std::swap(face_cells_[f][0], face_cells_[f][1]);
    if (uses[f] == 1) boundary_faces_.push_back(f);
  }
}

std::vector<int> PolyMesh::cell_vertices(int c) const {
  std::vector<int> ids;
  for (const auto& cf : cells_[c]) ids.insert(ids.end(), faces_[cf.face].begin(), faces_[cf.face].end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

GeometryCache compute_geometry(const PolyMesh& mesh, const GeometryOptions& options) {
  const bool strict = options.ingestion == Ingestion::strict;
  const double planarity_tol = strict ? 1e-10 : 1e-6;
  constexpr double closure_tol = 1e-10;
  const auto vertices = mesh.vertices();

  GeometryCache geo;
  geo.faces.resize(mesh.num_faces());
  geo.cells.resize(mesh.num_cells());
  std::vector<Vec3> area_vectors(mesh.num_faces());

  parallel_for(mesh.num_faces(), options.threads, [&](int begin, int end) {
    for (int f = begin; f < end; ++f) {
      const auto loop = mesh.face(f);
      const int m = static_cast<int>(loop.size());
      FaceGeometry& g = geo.faces[f];
      g.diameter = max_pair_distance(loop, vertices);

      Vec3 mean = Vec3::Zero();
      for (int v : loop) mean += vertices[v];
      mean /= m;
      Vec3 area_vec = Vec3::Zero();
      for (int i = 0; i < m; ++i)
        area_vec += 0.5 * (vertices[loop[i]] - mean).cross(vertices[loop[(i + 1) % m]] - mean);
      area_vectors[f] = area_vec;
      const double area = area_vec.norm();
      if (!(area > 0.0) || area < 1e-300) throw MeshError(face_tag(f) + " is degenerate (zero area)");
      if (strict && area < 1e-10 * g.diameter * g.diameter)
        throw MeshError(face_tag(f) + " is a sliver (area " + std::to_string(area) + ")");
      g.normal = area_vec / area;
      g.area = area;

      Vec3 centroid = Vec3::Zero();
      double weight = 0.0;
      for (int i = 0; i < m; ++i) {
        const Vec3& a = vertices[loop[i]];
        const Vec3& b = vertices[loop[(i + 1) % m]];
        const double t = 0.5 * (a - mean).cross(b - mean).dot(g.normal);
        centroid += t * (mean + a + b) / 3.0;
        weight += t;
      }
      g.centroid = centroid / weight;

      for (int v : loop) {
        if (std::abs((vertices[v] - g.centroid).dot(g.normal)) > planarity_tol * g.diameter)
          throw MeshError(face_tag(f) + " is not planar");
      }
      Vec3 edge = vertices[loop[1]] - vertices[loop[0]];
      edge -= edge.dot(g.normal) * g.normal;
      g.axis1 = edge.normalized();
      if (options.face_frame == FaceFrame::principal) {
        const Vec3 e2 = g.normal.cross(g.axis1);
        Eigen::Matrix2d spread = Eigen::Matrix2d::Zero();
        for (int v : loop) {
          const Vec3 d = vertices[v] - g.centroid;
          const Eigen::Vector2d t(d.dot(g.axis1), d.dot(e2));
          spread += t * t.transpose();
        }
        const Eigen::Vector2d major = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(spread).eigenvectors().col(1);
        g.axis1 = (major[0] * g.axis1 + major[1] * e2).normalized();
      }
      g.axis2 = g.normal.cross(g.axis1);
    }
  });

  parallel_for(mesh.num_cells(), options.threads, [&](int begin, int end) {
    for (int c = begin; c < end; ++c) {
      const auto ids = mesh.cell_vertices(c);
      CellGeometry& g = geo.cells[c];
      g.diameter = max_pair_distance(ids, vertices);

      Vec3 ref = Vec3::Zero();
      for (int v : ids) ref += vertices[v];
      ref /= static_cast<double>(ids.size());

      Vec3 closure = Vec3::Zero();
      Vec3 moment = Vec3::Zero();
      double volume = 0.0;
      for (const auto& [f, sign] : mesh.cell(c)) {
        closure += sign * area_vectors[f];
        const auto loop = mesh.face(f);
        const int m = static_cast<int>(loop.size());
        const Vec3& xf = geo.faces[f].centroid;
        for (int i = 0; i < m; ++i) {
          const Vec3& a = vertices[loop[i]];
          const Vec3& b = vertices[loop[(i + 1) % m]];
          const double vol = sign * (xf - ref).dot((a - ref).cross(b - ref)) / 6.0;
          volume += vol;
          moment += vol * (ref + xf + a + b) / 4.0;
        }
      }
      if (closure.norm() > closure_tol * g.diameter * g.diameter)
        throw MeshError(cell_tag(c) + " is not closed (signed face areas do not cancel)");
      if (!(volume > 0.0)) throw MeshError(cell_tag(c) + " has non-positive volume");
      g.volume = volume;
      g.centroid = moment / volume;
    }
  });
  return geo;
}

double mesh_size(const PolyMesh& mesh, const GeometryCache& geometry) {
  if (mesh.num_cells() == 0) throw MeshError("mesh_size of an empty mesh");
  double sum = 0.0;
  for (const auto& g : geometry.cells) sum += g.diameter;
  return sum / mesh.num_cells();
}

double SubTessellation::tet_volume(const std::array<int, 4>& t) const {
  const Vec3& o = points[t[0]];
  return (points[t[1]] - o).dot((points[t[2]] - o).cross(points[t[3]] - o)) / 6.0;
}

double SubTessellation::triangle_area(const std::array<int, 3>& t) const {
  return 0.5 * (points[t[1]] - points[t[0]]).cross(points[t[2]] - points[t[0]]).norm();
}

SubTessellation sub_tessellate(const PolyMesh& mesh, const GeometryCache& geometry) {
  SubTessellation tess;
  const int nv = mesh.num_vertices();
  const int nf = mesh.num_faces();
  tess.points.reserve(nv + nf + mesh.num_cells());
  for (const auto& v : mesh.vertices()) tess.points.push_back(v);
  for (const auto& g : geometry.faces) tess.points.push_back(g.centroid);
  for (const auto& g : geometry.cells) tess.points.push_back(g.centroid);

  tess.face_triangles.resize(nf);
  for (int f = 0; f < nf; ++f) {
    const auto loop = mesh.face(f);
    const int m = static_cast<int>(loop.size());
    for (int i = 0; i < m; ++i) tess.face_triangles[f].push_back({nv + f, loop[i], loop[(i + 1) % m]});
  }

  tess.cell_tets.resize(mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const int apex = nv + nf + c;
    for (const auto& [f, sign] : mesh.cell(c)) {
      for (const auto& tri : tess.face_triangles[f]) {
        if (sign > 0)
          tess.cell_tets[c].push_back({apex, tri[0], tri[1], tri[2]});
        else
          tess.cell_tets[c].push_back({apex, tri[0], tri[2], tri[1]});
      }
    }
  }
  return tess;
}

PreparedMesh prepare_mesh(PolyMesh mesh, const GeometryOptions& options) {
  PreparedMesh out;
  out.geometry = compute_geometry(mesh, options);
  out.tessellation = sub_tessellate(mesh, out.geometry);
  out.h = mesh_size(mesh, out.geometry);
  out.topology = std::move(mesh);
  return out;
}

PolyMesh gen_cube_mesh(int n, const Box& box) {
  if (n < 1) throw ConfigError("gen_cube_mesh: n must be at least 1");
  const int np = n + 1;
  auto vid = [np](int i, int j, int k) { return i + np * (j + np * k); };
  std::vector<Vec3> vertices;
  vertices.reserve(static_cast<std::size_t>(np) * np * np);
  const Vec3 step = (box.upper - box.lower) / n;
  for (int k = 0; k < np; ++k)
    for (int j = 0; j < np; ++j)
      for (int i = 0; i < np; ++i)
        vertices.push_back(box.lower + Vec3(i * step.x(), j * step.y(), k * step.z()));

  // faces normal to x, then y, then z; each loop counter-clockwise about +axis
  std::vector<std::vector<int>> faces;
  faces.reserve(3 * static_cast<std::size_t>(n) * n * np);
  auto xface = [&](int i, int j, int k) { return (i * n + j) * n + k; };
  const int ny0 = np * n * n;
  auto yface = [&](int i, int j, int k) { return ny0 + (j * n + i) * n + k; };
  const int nz0 = 2 * ny0;
  auto zface = [&](int i, int j, int k) { return nz0 + (k * n + i) * n + j; };
  for (int i = 0; i < np; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        faces.push_back({vid(i, j, k), vid(i, j + 1, k), vid(i, j + 1, k + 1), vid(i, j, k + 1)});
  for (int j = 0; j < np; ++j)
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k)
        faces.push_back({vid(i, j, k), vid(i, j, k + 1), vid(i + 1, j, k + 1), vid(i + 1, j, k)});
  for (int k = 0; k < np; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        faces.push_back({vid(i, j, k), vid(i + 1, j, k), vid(i + 1, j + 1, k), vid(i, j + 1, k)});

  std::vector<std::vector<CellFace>> cells;
  cells.reserve(static_cast<std::size_t>(n) * n * n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        cells.push_back({{xface(i, j, k), -1},
                         {xface(i + 1, j, k), 1},
                         {yface(i, j, k), -1},
                         {yface(i, j + 1, k), 1},
                         {zface(i, j, k), -1},
                         {zface(i, j, k + 1), 1}});
  return PolyMesh(std::move(vertices), std::move(faces), std::move(cells));
}

}  // namespace mvem
