#include "mn/mesh.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace mn {

TriMesh as_trimesh(const Mesh& mesh) {
  TriMesh out;
  out.vertices = mesh.vertices;
  out.triangles.reserve(mesh.faces.size());
  for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
    const auto& f = mesh.faces[i];
    if (f.size() != 3) throw ShapeError("face " + std::to_string(i) + " is not a triangle; tessellate first");
    out.triangles.push_back({f[0], f[1], f[2]});
  }
  return out;
}

Mesh as_mesh(const TriMesh& mesh) {
  Mesh out;
  out.vertices = mesh.vertices;
  for (const auto& t : mesh.triangles) out.faces.push_back({t[0], t[1], t[2]});
  return out;
}

double triangle_area(const TriMesh& mesh, std::size_t t) {
  const auto& tri = mesh.triangles[t];
  const Vec3& a = mesh.vertices[static_cast<std::size_t>(tri[0])];
  const Vec3& b = mesh.vertices[static_cast<std::size_t>(tri[1])];
  const Vec3& c = mesh.vertices[static_cast<std::size_t>(tri[2])];
  return 0.5 * (b - a).cross(c - a).norm();
}

double surface_area(const TriMesh& mesh) {
  double a = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) a += triangle_area(mesh, t);
  return a;
}

namespace {
std::map<std::pair<int, int>, int> edge_use(const Mesh& mesh) {
  std::map<std::pair<int, int>, int> use;
  for (const auto& f : mesh.faces) {
    if (f.size() == 2) {
      // Segments: count vertex incidence, keyed as a degenerate edge.
      ++use[{f[0], f[0]}];
      ++use[{f[1], f[1]}];
      continue;
    }
    for (std::size_t i = 0; i < f.size(); ++i) ++use[std::minmax(f[i], f[(i + 1) % f.size()])];
  }
  return use;
}
}  // namespace

std::size_t edge_count(const Mesh& mesh) {
  std::size_t n = 0;
  for (const auto& [e, c] : edge_use(mesh))
    if (e.first != e.second) ++n;
  return n + static_cast<std::size_t>(std::count_if(mesh.faces.begin(), mesh.faces.end(),
                                                    [](const auto& f) { return f.size() == 2; }));
}

bool is_watertight(const Mesh& mesh) {
  if (mesh.faces.empty()) return false;
  for (const auto& [e, c] : edge_use(mesh))
    if (c != 2) return false;
  return true;
}

std::vector<int> face_components(const Mesh& mesh, int* count) {
  std::vector<int> parent(mesh.vertices.size());
  std::iota(parent.begin(), parent.end(), 0);
  const auto find = [&](int v) {
    while (parent[static_cast<std::size_t>(v)] != v) {
      parent[static_cast<std::size_t>(v)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
      v = parent[static_cast<std::size_t>(v)];
    }
    return v;
  };
  for (const auto& f : mesh.faces)
    for (std::size_t i = 1; i < f.size(); ++i) {
      const int a = find(f[0]), b = find(f[i]);
      if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    }
  std::map<int, int> label;
  std::vector<int> out;
  out.reserve(mesh.faces.size());
  for (const auto& f : mesh.faces) {
    const int root = find(f[0]);
    auto [it, inserted] = label.emplace(root, static_cast<int>(label.size()));
    out.push_back(it->second);
  }
  if (count) *count = static_cast<int>(label.size());
  return out;
}

std::vector<Mesh> split_components(const Mesh& mesh) {
  int count = 0;
  const auto comp = face_components(mesh, &count);
  std::vector<Mesh> parts(static_cast<std::size_t>(count));
  std::vector<std::map<int, int>> remap(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < mesh.faces.size(); ++i) {
    auto& part = parts[static_cast<std::size_t>(comp[i])];
    auto& rm = remap[static_cast<std::size_t>(comp[i])];
    part.dim = mesh.dim;
    std::vector<int> face;
    for (int v : mesh.faces[i]) {
      auto [it, inserted] = rm.emplace(v, static_cast<int>(part.vertices.size()));
      if (inserted) part.vertices.push_back(mesh.vertices[static_cast<std::size_t>(v)]);
      face.push_back(it->second);
    }
    part.faces.push_back(std::move(face));
  }
  return parts;
}

void write_obj(std::ostream& out, const Mesh& mesh) {
  char buf[128];
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
    out << buf;
  }
  for (const auto& f : mesh.faces) {
    out << (f.size() == 2 ? 'l' : 'f');
    for (int i : f) out << ' ' << (i + 1);
    out << '\n';
  }
}

void write_obj(const std::filesystem::path& path, const Mesh& mesh) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_obj(out, mesh);
}

Mesh read_obj(std::istream& in) {
  Mesh mesh;
  bool any_segment = false, any_polygon = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ls >> v.x() >> v.y() >> v.z())) throw ParseError("OBJ line " + std::to_string(lineno) + ": bad vertex");
      mesh.vertices.push_back(v);
    } else if (tag == "f" || tag == "l") {
      std::vector<int> face;
      std::string tok;
      while (ls >> tok) {
        int idx = 0;
        try {
          idx = std::stoi(tok.substr(0, tok.find('/')));
        } catch (const std::exception&) {
          throw ParseError("OBJ line " + std::to_string(lineno) + ": bad index '" + tok + "'");
        }
        if (idx < 0) idx = static_cast<int>(mesh.vertices.size()) + idx + 1;
        if (idx < 1 || idx > static_cast<int>(mesh.vertices.size()))
          throw ParseError("OBJ line " + std::to_string(lineno) + ": index out of range");
        face.push_back(idx - 1);
      }
      if (face.size() < 2 || (tag == "f" && face.size() < 3))
        throw ParseError("OBJ line " + std::to_string(lineno) + ": too few indices");
      (tag == "l" ? any_segment : any_polygon) = true;
      mesh.faces.push_back(std::move(face));
    }
  }
  if (any_segment && !any_polygon) mesh.dim = 2;
  return mesh;
}

Mesh read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open mesh file " + path.string());
  return read_obj(in);
}

}  // namespace mn
