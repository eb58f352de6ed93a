// SPDX-License-Identifier: Apache-2.0
#include "mvem/error.hpp"
#include "mvem/mesh.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace mvem {

using json = nlohmann::json;

PolyMesh parse_mesh(const std::string& json_text, Ingestion ingestion) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw MeshError(std::string("mesh parse error: ") + e.what());
  }
  for (const char* key : {"vertices", "faces", "cells"})
    if (!doc.contains(key) || !doc[key].is_array())
      throw MeshError(std::string("mesh parse error: missing array '") + key + "'");

  std::vector<Vec3> vertices;
  std::vector<std::vector<int>> faces;
  std::vector<std::vector<CellFace>> cells;
  try {
    for (const auto& v : doc["vertices"]) {
      if (v.size() != 3) throw MeshError("mesh parse error: vertex without 3 coordinates");
      vertices.emplace_back(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
    }
    for (const auto& f : doc["faces"]) faces.push_back(f.get<std::vector<int>>());
    const int nf = static_cast<int>(faces.size());
    for (const auto& c : doc["cells"]) {
      std::vector<CellFace> cell;
      for (const auto& entry : c) {
        const int signed_id = entry.get<int>();
        if (signed_id == 0 || std::abs(signed_id) > nf)
          throw MeshError("mesh parse error: signed face index " + std::to_string(signed_id) + " out of range");
        cell.push_back({std::abs(signed_id) - 1, signed_id > 0 ? 1 : -1});
      }
      cells.push_back(std::move(cell));
    }
  } catch (const json::exception& e) {
    throw MeshError(std::string("mesh parse error: ") + e.what());
  }

  PolyMesh mesh(std::move(vertices), std::move(faces), std::move(cells));
  compute_geometry(mesh, {.ingestion = ingestion});
  return mesh;
}

PolyMesh load_mesh(const std::filesystem::path& path, Ingestion ingestion) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_mesh(buffer.str(), ingestion);
}

void save_mesh(const std::filesystem::path& path, const PolyMesh& mesh) {
  json doc;
  doc["vertices"] = json::array();
  for (const auto& v : mesh.vertices()) doc["vertices"].push_back({v.x(), v.y(), v.z()});
  doc["faces"] = json::array();
  for (int f = 0; f < mesh.num_faces(); ++f) {
    const auto loop = mesh.face(f);
    doc["faces"].push_back(std::vector<int>(loop.begin(), loop.end()));
  }
  doc["cells"] = json::array();
  for (int c = 0; c < mesh.num_cells(); ++c) {
    json cell = json::array();
    for (const auto& [f, sign] : mesh.cell(c)) cell.push_back(sign * (f + 1));
    doc["cells"].push_back(cell);
  }
  std::ofstream out(path);
  if (!out) throw MeshError("cannot write mesh file " + path.string());
  out << doc.dump();
}

}  // namespace mvem
