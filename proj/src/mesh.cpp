#include "csl/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "csl/errors.hpp"

namespace csl {

double Mesh::tet_volume(int t) const {
  const auto& T = tets[t];
  Vec3 a = vertices[T[1]] - vertices[T[0]];
  Vec3 b = vertices[T[2]] - vertices[T[0]];
  Vec3 c = vertices[T[3]] - vertices[T[0]];
  return a.cross(b).dot(c) / 6.0;
}

Vec3 Mesh::tet_centroid(int t) const {
  const auto& T = tets[t];
  return 0.25 * (vertices[T[0]] + vertices[T[1]] + vertices[T[2]] + vertices[T[3]]);
}

namespace {

// The four faces of a tet, each ordered so its normal points out of the tet
// when the tet is positively oriented.
constexpr int kTetFaces[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};

std::array<int, 3> sorted3(std::array<int, 3> f) {
  std::sort(f.begin(), f.end());
  return f;
}

}  // namespace

int finalize_mesh(Mesh& m) {
  int flipped = 0;
  for (std::size_t t = 0; t < m.tets.size(); ++t) {
    double vol = m.tet_volume(static_cast<int>(t));
    if (vol == 0.0) throw MeshError("degenerate tet " + std::to_string(t));
    if (vol < 0.0) {
      std::swap(m.tets[t][2], m.tets[t][3]);
      ++flipped;
    }
  }

  // Faces appearing in exactly one tet form the boundary.
  std::map<std::array<int, 3>, std::pair<int, int>> face_count;  // sorted -> (count, tet)
  for (int t = 0; t < m.num_tets(); ++t) {
    for (const auto& f : kTetFaces) {
      std::array<int, 3> key =
          sorted3({m.tets[t][f[0]], m.tets[t][f[1]], m.tets[t][f[2]]});
      auto it = face_count.find(key);
      if (it == face_count.end())
        face_count[key] = {1, t};
      else {
        if (++it->second.first > 2)
          throw MeshError("face shared by more than two tets");
      }
    }
  }

  m.boundary.clear();
  m.interior_faces = 0;
  for (int t = 0; t < m.num_tets(); ++t) {
    for (const auto& f : kTetFaces) {
      std::array<int, 3> tri = {m.tets[t][f[0]], m.tets[t][f[1]], m.tets[t][f[2]]};
      auto it = face_count.find(sorted3(tri));
      if (it->second.first == 1) {
        Mesh::BoundaryTri bt;
        bt.v = tri;
        bt.owner_tet = t;
        Vec3 e1 = m.vertices[tri[1]] - m.vertices[tri[0]];
        Vec3 e2 = m.vertices[tri[2]] - m.vertices[tri[0]];
        bt.normal = e1.cross(e2).normalized();
        m.boundary.push_back(bt);
      }
    }
  }
  for (const auto& [key, cnt] : face_count)
    if (cnt.first == 2) ++m.interior_faces;

  const int nv = m.num_vertices();
  m.on_boundary.assign(nv, 0);
  for (const auto& bt : m.boundary)
    for (int v : bt.v) m.on_boundary[v] = 1;

  m.boundary_vertices.clear();
  m.interior_vertices.clear();
  m.boundary_index_of.assign(nv, -1);
  m.interior_index_of.assign(nv, -1);
  for (int v = 0; v < nv; ++v) {
    if (m.on_boundary[v]) {
      m.boundary_index_of[v] = static_cast<int>(m.boundary_vertices.size());
      m.boundary_vertices.push_back(v);
    } else {
      m.interior_index_of[v] = static_cast<int>(m.interior_vertices.size());
      m.interior_vertices.push_back(v);
    }
  }

  // Edge adjacency and mesh size.
  std::vector<std::set<int>> nb(nv);
  m.h_max = 0.0;
  auto add_edge = [&](int a, int b) {
    nb[a].insert(b);
    nb[b].insert(a);
    m.h_max = std::max(m.h_max, (m.vertices[a] - m.vertices[b]).norm());
  };
  for (const auto& T : m.tets)
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) add_edge(T[i], T[j]);

  m.adj_offsets.assign(nv + 1, 0);
  m.adj.clear();
  for (int v = 0; v < nv; ++v) m.adj_offsets[v + 1] = m.adj_offsets[v] + static_cast<int>(nb[v].size());
  m.adj.reserve(m.adj_offsets[nv]);
  for (int v = 0; v < nv; ++v) m.adj.insert(m.adj.end(), nb[v].begin(), nb[v].end());

  return flipped;
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

Mesh make_box(int divisions) {
  if (divisions < 1) throw MeshError("make_box requires divisions >= 1");
  const int d = divisions;
  Mesh m;
  auto vid = [d](int i, int j, int k) { return (i * (d + 1) + j) * (d + 1) + k; };
  m.vertices.resize(static_cast<std::size_t>(d + 1) * (d + 1) * (d + 1));
  for (int i = 0; i <= d; ++i)
    for (int j = 0; j <= d; ++j)
      for (int k = 0; k <= d; ++k)
        m.vertices[vid(i, j, k)] = Vec3(double(i) / d, double(j) / d, double(k) / d);

  // Kuhn split: six tets along the main diagonal of each cell, chosen from
  // the permutations of the axis order; face-compatible across cells.
  static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                  {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) {
        int base[3] = {i, j, k};
        for (const auto& perm : perms) {
          int a[3] = {base[0], base[1], base[2]};
          std::array<int, 4> tet;
          tet[0] = vid(a[0], a[1], a[2]);
          for (int s = 0; s < 3; ++s) {
            a[perm[s]] += 1;
            tet[s + 1] = vid(a[0], a[1], a[2]);
          }
          m.tets.push_back(tet);
        }
      }
  finalize_mesh(m);
  return m;
}

int ball_divisions(int level) {
  if (level < 0) throw MeshError("make_ball requires level >= 0");
  if (level > 6) throw MeshError("make_ball level too large");
  return 2 << level;
}

Mesh make_ball(int level) {
  const int d = ball_divisions(level);
  Mesh m = make_box(d);
  // Cube [0,1]^3 -> [-1,1]^3 -> ball, radially rescaling each max-norm sphere
  // onto the Euclidean sphere of the same radius.  Boundary vertices land
  // exactly on the unit sphere.
  for (auto& p : m.vertices) {
    Vec3 q = 2.0 * p - Vec3(1, 1, 1);
    double linf = q.cwiseAbs().maxCoeff();
    double l2 = q.norm();
    p = l2 > 0 ? Vec3(q * (linf / l2)) : Vec3(0, 0, 0);
  }
  finalize_mesh(m);
  return m;
}

Mesh make_shell(int level, double r_inner) {
  if (!(r_inner > 0.0 && r_inner < 1.0)) throw MeshError("shell requires 0 < r_inner < 1");
  Mesh ball = make_ball(level);
  const int d = ball_divisions(level);

  // Surface triangulation of the unit sphere, from the ball's boundary.
  std::vector<int> surf_of(ball.num_vertices(), -1);
  std::vector<Vec3> dirs;
  for (int v : ball.boundary_vertices) {
    surf_of[v] = static_cast<int>(dirs.size());
    dirs.push_back(ball.vertices[v].normalized());
  }
  const int ns = static_cast<int>(dirs.size());

  // At least two layers so the mesh has interior vertices.
  int layers = std::max(2, static_cast<int>(std::lround((1.0 - r_inner) * d / 2.0)));
  Mesh m;
  m.vertices.resize(static_cast<std::size_t>(ns) * (layers + 1));
  for (int l = 0; l <= layers; ++l) {
    double r = r_inner + (1.0 - r_inner) * (double(l) / layers);
    for (int s = 0; s < ns; ++s) m.vertices[l * ns + s] = r * dirs[s];
  }

  // Each surface triangle extrudes to a prism per layer; split into three
  // tets with diagonals chosen by global vertex index so neighbouring prisms
  // agree on shared quad faces.
  for (const auto& bt : ball.boundary) {
    int sa = surf_of[bt.v[0]], sb = surf_of[bt.v[1]], sc = surf_of[bt.v[2]];
    for (int l = 0; l < layers; ++l) {
      int a0 = l * ns + sa, b0 = l * ns + sb, c0 = l * ns + sc;
      int a1 = a0 + ns, b1 = b0 + ns, c1 = c0 + ns;
      // Sort prism columns by bottom index; the quad faces then split along
      // the diagonal from the smaller column consistently on both sides.
      std::array<std::pair<int, int>, 3> col = {{{a0, a1}, {b0, b1}, {c0, c1}}};
      std::sort(col.begin(), col.end());
      auto [p0, q0] = col[0];
      auto [p1, q1] = col[1];
      auto [p2, q2] = col[2];
      m.tets.push_back({p0, p1, p2, q0});
      m.tets.push_back({p1, p2, q0, q1});
      m.tets.push_back({p2, q0, q1, q2});
    }
  }
  finalize_mesh(m);
  return m;
}

// ---------------------------------------------------------------------------
// Gmsh MSH 2.2 ASCII
// ---------------------------------------------------------------------------

Mesh load_gmsh(std::istream& in, GmshLoadReport* report) {
  std::string line;
  std::vector<Vec3> nodes;
  std::map<long, int> id_map;
  std::vector<std::array<int, 4>> tets;
  std::vector<std::array<int, 3>> tris;
  bool saw_format = false;

  auto next_line = [&](std::string& out) -> bool {
    while (std::getline(in, out)) {
      if (!out.empty() && out.back() == '\r') out.pop_back();
      if (!out.empty()) return true;
    }
    return false;
  };

  while (next_line(line)) {
    if (line == "$MeshFormat") {
      if (!next_line(line)) throw MeshError("truncated $MeshFormat");
      std::istringstream is(line);
      double version = 0;
      int file_type = 0, data_size = 0;
      is >> version >> file_type >> data_size;
      if (version < 2.0 || version >= 3.0)
        throw MeshError("unsupported MSH version (need 2.x ASCII)");
      if (file_type != 0) throw MeshError("binary MSH files are not supported");
      if (!next_line(line) || line != "$EndMeshFormat")
        throw MeshError("missing $EndMeshFormat");
      saw_format = true;
    } else if (line == "$Nodes") {
      if (!next_line(line)) throw MeshError("truncated $Nodes");
      long count = std::stol(line);
      nodes.reserve(count);
      for (long i = 0; i < count; ++i) {
        if (!next_line(line)) throw MeshError("truncated $Nodes");
        std::istringstream is(line);
        long id;
        double x, y, z;
        if (!(is >> id >> x >> y >> z)) throw MeshError("malformed node line: " + line);
        id_map[id] = static_cast<int>(nodes.size());
        nodes.emplace_back(x, y, z);
      }
      if (!next_line(line) || line != "$EndNodes") throw MeshError("missing $EndNodes");
    } else if (line == "$Elements") {
      if (!next_line(line)) throw MeshError("truncated $Elements");
      long count = std::stol(line);
      for (long i = 0; i < count; ++i) {
        if (!next_line(line)) throw MeshError("truncated $Elements");
        std::istringstream is(line);
        long id;
        int type, ntags;
        if (!(is >> id >> type >> ntags)) throw MeshError("malformed element line: " + line);
        for (int t = 0; t < ntags; ++t) {
          long tag;
          is >> tag;
        }
        auto read_node = [&]() {
          long nid;
          if (!(is >> nid)) throw MeshError("malformed element line: " + line);
          auto it = id_map.find(nid);
          if (it == id_map.end()) throw MeshError("element references unknown node");
          return it->second;
        };
        if (type == 4) {
          std::array<int, 4> t{};
          for (auto& v : t) v = read_node();
          tets.push_back(t);
        } else if (type == 2) {
          std::array<int, 3> t{};
          for (auto& v : t) v = read_node();
          tris.push_back(t);
        } else if (type == 15 || type == 1) {
          // points/lines: ignored
        } else {
          throw MeshError("unsupported element type " + std::to_string(type));
        }
      }
      if (!next_line(line) || line != "$EndElements") throw MeshError("missing $EndElements");
    }
    // other sections are skipped implicitly
  }
  if (!saw_format) throw MeshError("not a Gmsh MSH file (no $MeshFormat)");
  if (tets.empty()) throw MeshError("mesh contains no tetrahedra");

  Mesh m;
  m.vertices = std::move(nodes);
  m.tets = std::move(tets);
  int flipped = finalize_mesh(m);

  bool consistent = true;
  if (!tris.empty()) {
    std::set<std::array<int, 3>> rebuilt;
    for (const auto& bt : m.boundary) rebuilt.insert(sorted3(bt.v));
    for (const auto& t : tris)
      if (!rebuilt.count(sorted3(t))) consistent = false;
  }
  if (report) {
    report->flipped_tets = flipped;
    report->provided_triangles = static_cast<int>(tris.size());
    report->triangles_consistent = consistent;
  }
  if (!consistent)
    throw MeshError("provided surface triangles are not faces of the tet boundary");
  return m;
}

Mesh load_gmsh_file(const std::string& path, GmshLoadReport* report) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file: " + path);
  return load_gmsh(in, report);
}

void write_gmsh(const Mesh& m, std::ostream& out) {
  out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n";
  out << "$Nodes\n" << m.num_vertices() << "\n";
  char buf[128];
  for (int v = 0; v < m.num_vertices(); ++v) {
    std::snprintf(buf, sizeof buf, "%d %.17g %.17g %.17g\n", v + 1, m.vertices[v][0],
                  m.vertices[v][1], m.vertices[v][2]);
    out << buf;
  }
  out << "$EndNodes\n$Elements\n" << (m.num_tets() + m.boundary.size()) << "\n";
  long id = 1;
  for (const auto& bt : m.boundary) {
    out << id++ << " 2 2 2 2 " << bt.v[0] + 1 << ' ' << bt.v[1] + 1 << ' ' << bt.v[2] + 1
        << "\n";
  }
  for (const auto& t : m.tets) {
    out << id++ << " 4 2 1 1 " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << ' '
        << t[3] + 1 << "\n";
  }
  out << "$EndElements\n";
}

void write_gmsh_file(const Mesh& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw MeshError("cannot write mesh file: " + path);
  write_gmsh(m, out);
}

void write_vtk(const Mesh& m, std::ostream& out,
               const std::map<std::string, std::vector<double>>& point_scalars,
               const std::map<std::string, std::vector<double>>& cell_scalars) {
  out << "# vtk DataFile Version 3.0\ncsl mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << m.num_vertices() << " double\n";
  char buf[128];
  for (const auto& p : m.vertices) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", p[0], p[1], p[2]);
    out << buf;
  }
  out << "CELLS " << m.num_tets() << ' ' << 5 * m.num_tets() << "\n";
  for (const auto& t : m.tets)
    out << "4 " << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << "\n";
  out << "CELL_TYPES " << m.num_tets() << "\n";
  for (int i = 0; i < m.num_tets(); ++i) out << "10\n";
  if (!point_scalars.empty()) {
    out << "POINT_DATA " << m.num_vertices() << "\n";
    for (const auto& [name, data] : point_scalars) {
      if (static_cast<int>(data.size()) != m.num_vertices())
        throw MeshError("point scalar '" + name + "' has wrong size");
      out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
      for (double v : data) {
        std::snprintf(buf, sizeof buf, "%.17g\n", v);
        out << buf;
      }
    }
  }
  if (!cell_scalars.empty()) {
    out << "CELL_DATA " << m.num_tets() << "\n";
    for (const auto& [name, data] : cell_scalars) {
      if (static_cast<int>(data.size()) != m.num_tets())
        throw MeshError("cell scalar '" + name + "' has wrong size");
      out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
      for (double v : data) {
        std::snprintf(buf, sizeof buf, "%.17g\n", v);
        out << buf;
      }
    }
  }
}

void write_vtk_file(const Mesh& m, const std::string& path,
                    const std::map<std::string, std::vector<double>>& point_scalars,
                    const std::map<std::string, std::vector<double>>& cell_scalars) {
  std::ofstream out(path);
  if (!out) throw MeshError("cannot write VTK file: " + path);
  write_vtk(m, out, point_scalars, cell_scalars);
}

}  // namespace csl
