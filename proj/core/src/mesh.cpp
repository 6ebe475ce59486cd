#include "biharm/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace biharm {

namespace {

double signed_area(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                   const Eigen::Vector2d& c) {
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) -
                (c.x() - a.x()) * (b.y() - a.y()));
}

}  // namespace

Triangulation::Triangulation(std::vector<Eigen::Vector2d> vertices,
                             std::vector<std::array<int, 3>> triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  build_topology();
}

void Triangulation::build_topology() {
  const int nv = vertex_count();
  const int nt = triangle_count();
  if (nv < 3 || nt < 1) throw MeshError("mesh needs at least 3 vertices and 1 triangle");

  tri_area_.resize(nt);
  tri_diameter_.resize(nt);
  tri_edges_.assign(nt, {-1, -1, -1});
  vertex_tris_.assign(nv, {});
  total_area_ = 0.0;
  h_max_ = 0.0;
  shape_regularity_ = 0.0;

  for (int t = 0; t < nt; ++t) {
    const auto& tri = triangles_[t];
    for (int i = 0; i < 3; ++i) {
      if (tri[i] < 0 || tri[i] >= nv)
        throw MeshError("triangle " + std::to_string(t) + " references vertex " +
                        std::to_string(tri[i]) + " out of range");
      if (tri[i] == tri[(i + 1) % 3])
        throw MeshError("triangle " + std::to_string(t) + " has repeated vertices");
    }
    const Eigen::Vector2d& a = vertices_[tri[0]];
    const Eigen::Vector2d& b = vertices_[tri[1]];
    const Eigen::Vector2d& c = vertices_[tri[2]];
    const double area = signed_area(a, b, c);
    if (!(area > 0.0))
      throw MeshError("triangle " + std::to_string(t) +
                      " is degenerate or clockwise (signed area " +
                      std::to_string(area) + ")");
    tri_area_[t] = area;
    total_area_ += area;
    const double la = (b - c).norm(), lb = (c - a).norm(), lc = (a - b).norm();
    const double diam = std::max({la, lb, lc});
    tri_diameter_[t] = diam;
    h_max_ = std::max(h_max_, diam);
    const double inradius = 2.0 * area / (la + lb + lc);
    shape_regularity_ = std::max(shape_regularity_, diam / inradius);
    for (int i = 0; i < 3; ++i) vertex_tris_[tri[i]].push_back(t);
  }

  // Edge table keyed by the sorted vertex pair; K+ is the first (lowest
  // indexed) adjacent triangle encountered.
  std::map<std::pair<int, int>, int> edge_index;
  edges_.clear();
  for (int t = 0; t < nt; ++t) {
    const auto& tri = triangles_[t];
    for (int lv = 0; lv < 3; ++lv) {
      const int v0 = tri[(lv + 1) % 3];
      const int v1 = tri[(lv + 2) % 3];
      const std::pair<int, int> key{std::min(v0, v1), std::max(v0, v1)};
      auto it = edge_index.find(key);
      if (it == edge_index.end()) {
        Edge e;
        e.vertices = {key.first, key.second};
        e.tri_plus = t;
        const Eigen::Vector2d p0 = vertices_[key.first];
        const Eigen::Vector2d p1 = vertices_[key.second];
        e.length = (p1 - p0).norm();
        e.midpoint = 0.5 * (p0 + p1);
        const Eigen::Vector2d tangent = (p1 - p0) / e.length;
        Eigen::Vector2d n(tangent.y(), -tangent.x());
        // orient outward with respect to K+
        if (n.dot(e.midpoint - centroid(t)) < 0.0) n = -n;
        e.normal = n;
        const int idx = static_cast<int>(edges_.size());
        edges_.push_back(e);
        edge_index.emplace(key, idx);
        tri_edges_[t][lv] = idx;
      } else {
        Edge& e = edges_[it->second];
        if (e.tri_minus >= 0)
          throw MeshError("edge (" + std::to_string(key.first) + "," +
                          std::to_string(key.second) +
                          ") is shared by more than two triangles");
        e.tri_minus = t;
        tri_edges_[t][lv] = it->second;
      }
    }
  }

  // Triangles are visited in index order, so tri_plus < tri_minus holds for
  // interior edges by construction.
  interior_edge_count_ = 0;
  vertex_boundary_.assign(nv, false);
  for (const Edge& e : edges_) {
    if (e.on_boundary()) {
      vertex_boundary_[e.vertices[0]] = true;
      vertex_boundary_[e.vertices[1]] = true;
    } else {
      ++interior_edge_count_;
    }
  }
  interior_vertex_count_ = 0;
  for (int v = 0; v < nv; ++v) {
    if (vertex_tris_[v].empty())
      throw MeshError("vertex " + std::to_string(v) + " is unused");
    if (!vertex_boundary_[v]) ++interior_vertex_count_;
  }
}

Eigen::Vector2d Triangulation::centroid(int t) const {
  const auto& tri = triangles_[t];
  return (vertices_[tri[0]] + vertices_[tri[1]] + vertices_[tri[2]]) / 3.0;
}

Eigen::Vector3d Triangulation::barycentric(int t, const Eigen::Vector2d& x) const {
  const auto& tri = triangles_[t];
  const Eigen::Vector2d& a = vertices_[tri[0]];
  const Eigen::Vector2d& b = vertices_[tri[1]];
  const Eigen::Vector2d& c = vertices_[tri[2]];
  const double area = tri_area_[t];
  Eigen::Vector3d lambda;
  lambda[0] = signed_area(x, b, c) / area;
  lambda[1] = signed_area(a, x, c) / area;
  lambda[2] = signed_area(a, b, x) / area;
  return lambda;
}

bool Triangulation::contains(int t, const Eigen::Vector2d& x, double tol) const {
  const Eigen::Vector3d l = barycentric(t, x);
  return l.minCoeff() >= -tol;
}

int Triangulation::locate(const Eigen::Vector2d& x) const {
  for (int t = 0; t < triangle_count(); ++t)
    if (contains(t, x, 1e-12)) return t;
  return -1;
}

Triangulation Triangulation::structured_square(int n) {
  if (n < 1) throw MeshError("structured_square requires n >= 1");
  std::vector<Eigen::Vector2d> verts;
  verts.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      verts.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
  auto vid = [n](int i, int j) { return j * (n + 1) + i; };
  std::vector<std::array<int, 3>> tris;
  tris.reserve(static_cast<std::size_t>(2) * n * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      // diagonal from (i,j) to (i+1,j+1)
      tris.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
      tris.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
    }
  }
  return Triangulation(std::move(verts), std::move(tris));
}

Triangulation Triangulation::lshape() {
  std::vector<Eigen::Vector2d> verts = {
      {0.0, 0.0},  {1.0, 0.0},   {1.0, 1.0},  {0.0, 1.0},
      {-1.0, 1.0}, {-1.0, 0.0},  {-1.0, -1.0}, {0.0, -1.0},
  };
  // fan of six triangles around the reentrant corner (vertex 0)
  std::vector<std::array<int, 3>> tris = {
      {0, 1, 2}, {0, 2, 3}, {0, 3, 4}, {0, 4, 5}, {0, 5, 6}, {0, 6, 7},
  };
  return Triangulation(std::move(verts), std::move(tris));
}

Triangulation Triangulation::refined() const {
  std::vector<Eigen::Vector2d> verts = vertices_;
  std::vector<int> edge_mid(edges_.size());
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    edge_mid[e] = static_cast<int>(verts.size());
    verts.push_back(edges_[e].midpoint);
  }
  std::vector<std::array<int, 3>> tris;
  std::vector<int> parents;
  tris.reserve(4 * triangles_.size());
  parents.reserve(4 * triangles_.size());
  for (int t = 0; t < triangle_count(); ++t) {
    const auto& tri = triangles_[t];
    const int m0 = edge_mid[tri_edges_[t][0]];  // midpoint opposite vertex 0
    const int m1 = edge_mid[tri_edges_[t][1]];
    const int m2 = edge_mid[tri_edges_[t][2]];
    tris.push_back({tri[0], m2, m1});
    tris.push_back({tri[1], m0, m2});
    tris.push_back({tri[2], m1, m0});
    tris.push_back({m0, m1, m2});
    for (int c = 0; c < 4; ++c) parents.push_back(t);
  }
  Triangulation fine(std::move(verts), std::move(tris));
  fine.parents_ = std::move(parents);
  return fine;
}

namespace {

[[noreturn]] void fail_line(const std::filesystem::path& file, int line,
                            const std::string& what) {
  throw MeshError(file.string() + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

Triangulation Triangulation::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw MeshError("cannot open mesh file " + file.string());
  std::string line;
  int lineno = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      const auto pos = line.find('#');
      if (pos != std::string::npos) line.erase(pos);
      if (line.find_first_not_of(" \t\r\n") != std::string::npos) return true;
    }
    return false;
  };

  if (!next_line()) throw MeshError(file.string() + ": empty mesh file");
  std::istringstream header(line);
  long nv = 0, nt = 0;
  if (!(header >> nv >> nt) || nv < 3 || nt < 1)
    fail_line(file, lineno, "expected header 'nv nt' with nv >= 3, nt >= 1");

  std::vector<Eigen::Vector2d> verts(static_cast<std::size_t>(nv));
  for (long v = 0; v < nv; ++v) {
    if (!next_line()) fail_line(file, lineno, "unexpected end of file in vertex block");
    std::istringstream ls(line);
    double x, y;
    if (!(ls >> x >> y)) fail_line(file, lineno, "expected vertex line 'x y'");
    if (!std::isfinite(x) || !std::isfinite(y))
      fail_line(file, lineno, "vertex coordinates must be finite");
    verts[static_cast<std::size_t>(v)] = {x, y};
  }
  std::vector<std::array<int, 3>> tris(static_cast<std::size_t>(nt));
  for (long t = 0; t < nt; ++t) {
    if (!next_line()) fail_line(file, lineno, "unexpected end of file in triangle block");
    std::istringstream ls(line);
    long i, j, k;
    if (!(ls >> i >> j >> k)) fail_line(file, lineno, "expected triangle line 'i j k'");
    for (long idx : {i, j, k})
      if (idx < 0 || idx >= nv)
        fail_line(file, lineno, "vertex index " + std::to_string(idx) + " out of range");
    tris[static_cast<std::size_t>(t)] = {static_cast<int>(i), static_cast<int>(j),
                                         static_cast<int>(k)};
  }
  try {
    return Triangulation(std::move(verts), std::move(tris));
  } catch (const MeshError& err) {
    throw MeshError(file.string() + ": " + err.what());
  }
}

void Triangulation::save(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) throw MeshError("cannot write mesh file " + file.string());
  out.precision(17);
  out << vertex_count() << ' ' << triangle_count() << '\n';
  for (const auto& v : vertices_) out << v.x() << ' ' << v.y() << '\n';
  for (const auto& t : triangles_) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

std::uint64_t Triangulation::content_hash() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& v : vertices_) {
    const double xy[2] = {v.x(), v.y()};
    mix(xy, sizeof xy);
  }
  for (const auto& t : triangles_) mix(t.data(), sizeof(int) * 3);
  return h;
}

}  // namespace biharm
