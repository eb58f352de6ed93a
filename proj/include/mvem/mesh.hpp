// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <filesystem>
#include <span>
#include <vector>

namespace mvem {

using Vec3 = Eigen::Vector3d;

/// A face as seen from a cell. `sign` is +1 when the stored face normal points
/// out of the cell and -1 when it points in.
struct CellFace {
  int face = 0;
  int sign = 1;
};

/// Polyhedral mesh topology: vertices, polygonal faces given as vertex loops,
/// and cells given as signed face lists.
///
/// The constructor validates combinatorial invariants only (index ranges,
/// distinct loop vertices, every face used by one or two cells with opposite
/// orientation). Geometric invariants (planarity, closedness, positive
/// volume) are checked by compute_geometry().
class PolyMesh {
 public:
  PolyMesh() = default;
  PolyMesh(std::vector<Vec3> vertices, std::vector<std::vector<int>> faces,
           std::vector<std::vector<CellFace>> cells);

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_faces() const { return static_cast<int>(faces_.size()); }
  int num_cells() const { return static_cast<int>(cells_.size()); }

  const Vec3& vertex(int v) const { return vertices_[v]; }
  std::span<const Vec3> vertices() const { return vertices_; }
  std::span<const int> face(int f) const { return faces_[f]; }
  std::span<const CellFace> cell(int c) const { return cells_[c]; }

  /// Cells adjacent to face f; the second entry is -1 on the boundary. The
  /// first entry is the cell that sees the stored normal as outward.
  std::array<int, 2> face_cells(int f) const { return face_cells_[f]; }
  bool is_boundary(int f) const { return face_cells_[f][1] < 0; }
  std::span<const int> boundary_faces() const { return boundary_faces_; }

  /// Sorted, de-duplicated vertex indices of cell c.
  std::vector<int> cell_vertices(int c) const;

 private:
  std::vector<Vec3> vertices_;
  std::vector<std::vector<int>> faces_;
  std::vector<std::vector<CellFace>> cells_;
  std::vector<std::array<int, 2>> face_cells_;
  std::vector<int> boundary_faces_;
};

struct FaceGeometry {
  Vec3 centroid = Vec3::Zero();
  Vec3 normal = Vec3::Zero();  ///< unit, oriented by the stored vertex loop
  Vec3 axis1 = Vec3::Zero();   ///< in-plane frame, see FaceFrame
  Vec3 axis2 = Vec3::Zero();   ///< normal x axis1
  double area = 0.0;
  double diameter = 0.0;
};

struct CellGeometry {
  Vec3 centroid = Vec3::Zero();  ///< volume centroid
  double volume = 0.0;
  double diameter = 0.0;  ///< max vertex-pair distance
};

struct GeometryCache {
  std::vector<CellGeometry> cells;
  std::vector<FaceGeometry> faces;
};

/// How much slack mesh ingestion allows.
///
/// strict: faces planar to 1e-10 h_f, closedness to 1e-10 h_P^2 and slivers
/// with |f| < 1e-10 h_f^2 rejected. lenient: planarity relaxed to 1e-6 h_f,
/// slivers accepted as long as their area is positive.
enum class Ingestion { strict, lenient };

/// In-plane face axes: principal axes of the vertex spread, or the first
/// edge direction.
enum class FaceFrame { principal, first_edge };

struct GeometryOptions {
  Ingestion ingestion = Ingestion::lenient;
  int threads = 1;
  FaceFrame face_frame = FaceFrame::principal;
};

GeometryCache compute_geometry(const PolyMesh& mesh, const GeometryOptions& options = {});

/// Average of the cell diameters.
double mesh_size(const PolyMesh& mesh, const GeometryCache& geometry);

/// Tetrahedra and triangles used for quadrature. Point indices address
/// `points`, which holds the mesh vertices, then the face centroids, then the
/// cell centroids.
struct SubTessellation {
  std::vector<Vec3> points;
  std::vector<std::vector<std::array<int, 4>>> cell_tets;
  std::vector<std::vector<std::array<int, 3>>> face_triangles;

  double tet_volume(const std::array<int, 4>& t) const;
  double triangle_area(const std::array<int, 3>& t) const;
};

/// Fans every face from its centroid and cones each face triangle to the cell
/// centroid. Triangles follow the stored face orientation; tetrahedra are
/// oriented to have positive volume for star-shaped cells.
SubTessellation sub_tessellate(const PolyMesh& mesh, const GeometryCache& geometry);

/// Mesh plus everything derived from it that the discretization reads.
struct PreparedMesh {
  PolyMesh topology;
  GeometryCache geometry;
  SubTessellation tessellation;
  double h = 0.0;

  int num_cells() const { return topology.num_cells(); }
  int num_faces() const { return topology.num_faces(); }
};

PreparedMesh prepare_mesh(PolyMesh mesh, const GeometryOptions& options = {});

/// Axis-aligned box.
struct Box {
  Vec3 lower = Vec3::Zero();
  Vec3 upper = Vec3::Ones();
};

/// Structured n x n x n hexahedral mesh of `box`.
PolyMesh gen_cube_mesh(int n, const Box& box = {});

/// Reads the native JSON mesh format and validates all invariants.
///
/// Format: {"vertices": [[x,y,z],...], "faces": [[v0,v1,...],...],
/// "cells": [[+-f,...],...]} with 0-based vertex indices and 1-based signed
/// face indices (negative: the cell sees the stored normal as inward).
PolyMesh load_mesh(const std::filesystem::path& path, Ingestion ingestion = Ingestion::lenient);

/// Parses the same format from a string (used by load_mesh).
PolyMesh parse_mesh(const std::string& json_text, Ingestion ingestion = Ingestion::lenient);

void save_mesh(const std::filesystem::path& path, const PolyMesh& mesh);

}  // namespace mvem
