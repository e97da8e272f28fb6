#include "cornerpml/mesh_io.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "cornerpml/error.hpp"

namespace cpml {
namespace {

struct LineReader {
  std::istringstream in;
  int line = 0;

  explicit LineReader(const std::string& text) : in(text) {}

  bool next(std::string& out) {
    while (std::getline(in, out)) {
      ++line;
      if (!out.empty() && out.back() == '\r') out.pop_back();
      if (out.find_first_not_of(" \t") != std::string::npos) return true;
    }
    return false;
  }

  std::string expect() {
    std::string s;
    if (!next(s)) throw ParseError("unexpected end of file", line);
    return s;
  }
};

template <class T>
T read_value(std::istringstream& ls, int line, const char* what) {
  T v{};
  if (!(ls >> v)) throw ParseError(std::string("cannot read ") + what, line);
  return v;
}

void add_midpoints(Mesh& mesh, const std::vector<std::array<int, 3>>& tris,
                   const std::vector<std::pair<std::array<int, 2>, int>>& lines) {
  std::map<std::pair<int, int>, int> mid;
  auto midpoint = [&](int a, int b) {
    const std::pair<int, int> key{std::min(a, b), std::max(a, b)};
    const auto it = mid.find(key);
    if (it != mid.end()) return it->second;
    mesh.nodes.push_back(0.5 * (mesh.nodes[static_cast<std::size_t>(a)] + mesh.nodes[static_cast<std::size_t>(b)]));
    const int id = static_cast<int>(mesh.nodes.size()) - 1;
    mid[key] = id;
    return id;
  };
  for (const auto& t : tris) {
    const int m01 = midpoint(t[0], t[1]);
    const int m12 = midpoint(t[1], t[2]);
    const int m20 = midpoint(t[2], t[0]);
    mesh.tris.push_back({t[0], t[1], t[2], m01, m12, m20});
  }
  for (const auto& [v, tag] : lines) {
    const auto it = mid.find({std::min(v[0], v[1]), std::max(v[0], v[1])});
    if (it == mid.end()) throw MeshError("boundary line is not a triangle edge");
    mesh.boundary.push_back({{v[0], v[1], it->second}, tag});
  }
}

}  // namespace

Mesh parse_msh(const std::string& text, const std::vector<Vec2>* polygon) {
  LineReader rd(text);
  std::string s;
  bool have_nodes = false, have_elements = false;
  std::map<long, int> node_id;
  Mesh mesh;
  std::vector<std::array<int, 3>> tris;
  std::vector<Region> region;
  std::vector<std::pair<std::array<int, 2>, int>> lines;

  while (rd.next(s)) {
    if (s == "$MeshFormat") {
      std::istringstream ls(rd.expect());
      const std::string version = read_value<std::string>(ls, rd.line, "format version");
      const int type = read_value<int>(ls, rd.line, "file type");
      if (version.rfind("2.2", 0) != 0) throw ParseError("only MSH 2.2 is supported", rd.line);
      if (type != 0) throw ParseError("only ASCII MSH files are supported", rd.line);
      if (rd.expect() != "$EndMeshFormat") throw ParseError("expected $EndMeshFormat", rd.line);
    } else if (s == "$Nodes") {
      std::istringstream ls(rd.expect());
      const long n = read_value<long>(ls, rd.line, "node count");
      if (n < 0) throw ParseError("negative node count", rd.line);
      for (long i = 0; i < n; ++i) {
        std::istringstream nl(rd.expect());
        const long id = read_value<long>(nl, rd.line, "node id");
        const double x = read_value<double>(nl, rd.line, "x coordinate");
        const double y = read_value<double>(nl, rd.line, "y coordinate");
        read_value<double>(nl, rd.line, "z coordinate");
        if (!node_id.emplace(id, static_cast<int>(mesh.nodes.size())).second) {
          throw ParseError("duplicate node id " + std::to_string(id), rd.line);
        }
        mesh.nodes.push_back({x, y});
      }
      if (rd.expect() != "$EndNodes") throw ParseError("expected $EndNodes", rd.line);
      have_nodes = true;
    } else if (s == "$Elements") {
      if (!have_nodes) throw ParseError("$Elements before $Nodes", rd.line);
      std::istringstream ls(rd.expect());
      const long n = read_value<long>(ls, rd.line, "element count");
      for (long i = 0; i < n; ++i) {
        std::istringstream el(rd.expect());
        read_value<long>(el, rd.line, "element id");
        const int type = read_value<int>(el, rd.line, "element type");
        const int ntags = read_value<int>(el, rd.line, "tag count");
        if (ntags < 1) throw ParseError("element needs a physical tag", rd.line);
        const int phys = read_value<int>(el, rd.line, "physical tag");
        for (int k = 1; k < ntags; ++k) read_value<long>(el, rd.line, "tag");
        int nv = 0;
        if (type == 1) {
          nv = 2;
        } else if (type == 2) {
          nv = 3;
        } else if (type == 15) {
          nv = 1;
        } else {
          throw ParseError("unsupported element type " + std::to_string(type), rd.line);
        }
        std::array<int, 3> v{};
        for (int k = 0; k < nv; ++k) {
          const long id = read_value<long>(el, rd.line, "element node");
          const auto it = node_id.find(id);
          if (it == node_id.end()) throw ParseError("unknown node id " + std::to_string(id), rd.line);
          v[static_cast<std::size_t>(k)] = it->second;
        }
        if (type == 2) {
          if (phys != kMshDielectric && phys != kMshMetal) {
            throw ParseError("triangle physical tag must be " + std::to_string(kMshDielectric) + " or " +
                                 std::to_string(kMshMetal),
                             rd.line);
          }
          const Vec2 a = mesh.nodes[static_cast<std::size_t>(v[0])];
          const Vec2 b = mesh.nodes[static_cast<std::size_t>(v[1])];
          const Vec2 c = mesh.nodes[static_cast<std::size_t>(v[2])];
          const double o = orient(a, b, c);
          if (o == 0.0) throw ParseError("degenerate triangle", rd.line);
          if (o < 0.0) std::swap(v[1], v[2]);
          tris.push_back(v);
          region.push_back(phys == kMshMetal ? Region::metal : Region::dielectric);
        } else if (type == 1) {
          if (phys <= 0) throw ParseError("boundary line needs a positive physical tag", rd.line);
          lines.push_back({{v[0], v[1]}, phys});
        }
      }
      if (rd.expect() != "$EndElements") throw ParseError("expected $EndElements", rd.line);
      have_elements = true;
    } else if (!s.empty() && s[0] == '$') {
      // Skip unknown sections.
      const std::string end = "$End" + s.substr(1);
      std::string t;
      do {
        t = rd.expect();
      } while (t != end);
    } else {
      throw ParseError("unexpected content outside a section", rd.line);
    }
  }
  if (!have_nodes || !have_elements) throw ParseError("missing $Nodes or $Elements section", rd.line);
  if (tris.empty()) throw ParseError("mesh has no triangles", rd.line);

  const std::size_t nv = mesh.nodes.size();
  add_midpoints(mesh, tris, lines);
  mesh.region = region;
  // Drop unused vertices would renumber; keep them but require use.
  std::vector<bool> used(nv, false);
  for (const auto& t : tris) {
    for (int k : t) used[static_cast<std::size_t>(k)] = true;
  }
  if (std::find(used.begin(), used.end(), false) != used.end()) {
    throw MeshError("mesh has nodes not attached to any triangle");
  }
  const AuditReport rep = audit_mesh(mesh, polygon, 0.0);
  if (!rep.ok) throw MeshError("imported mesh is invalid: " + rep.problems.front());
  return mesh;
}

Mesh import_msh(const std::string& path, const std::vector<Vec2>* polygon) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_msh(buf.str(), polygon);
}

std::string format_msh(const Mesh& mesh) {
  // Vertices only: renumber the corner nodes.
  std::vector<int> vid(mesh.nodes.size(), 0);
  std::vector<int> order;
  for (const auto& t : mesh.tris) {
    for (int k = 0; k < 3; ++k) {
      if (vid[static_cast<std::size_t>(t[k])] == 0) {
        order.push_back(t[k]);
        vid[static_cast<std::size_t>(t[k])] = static_cast<int>(order.size());
      }
    }
  }
  std::ostringstream out;
  out << std::setprecision(17);
  out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n" << order.size() << "\n";
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Vec2 p = mesh.nodes[static_cast<std::size_t>(order[i])];
    out << i + 1 << " " << p.x << " " << p.y << " 0\n";
  }
  out << "$EndNodes\n$Elements\n" << mesh.boundary.size() + mesh.tris.size() << "\n";
  std::size_t id = 1;
  for (const BoundaryEdge& e : mesh.boundary) {
    out << id++ << " 1 2 " << e.tag << " " << e.tag << " " << vid[static_cast<std::size_t>(e.nodes[0])] << " "
        << vid[static_cast<std::size_t>(e.nodes[1])] << "\n";
  }
  for (std::size_t t = 0; t < mesh.tris.size(); ++t) {
    const int phys = mesh.region[t] == Region::metal ? kMshMetal : kMshDielectric;
    const auto& v = mesh.tris[t];
    out << id++ << " 2 2 " << phys << " " << phys << " " << vid[static_cast<std::size_t>(v[0])] << " "
        << vid[static_cast<std::size_t>(v[1])] << " " << vid[static_cast<std::size_t>(v[2])] << "\n";
  }
  out << "$EndElements\n";
  return out.str();
}

void export_msh(const Mesh& mesh, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ParseError("cannot write " + path);
  f << format_msh(mesh);
}

void export_vtk(const Mesh& mesh, const std::string& path, const std::vector<std::complex<double>>& field) {
  if (!field.empty() && field.size() != mesh.nodes.size()) {
    throw MeshError("field size does not match the node count");
  }
  std::ofstream f(path);
  if (!f) throw ParseError("cannot write " + path);
  f << std::setprecision(17);
  f << "# vtk DataFile Version 3.0\ncornerpml\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  f << "POINTS " << mesh.nodes.size() << " double\n";
  for (const Vec2& p : mesh.nodes) f << p.x << " " << p.y << " 0\n";
  f << "CELLS " << mesh.tris.size() << " " << 7 * mesh.tris.size() << "\n";
  for (const auto& t : mesh.tris) {
    f << 6;
    for (int k : t) f << " " << k;
    f << "\n";
  }
  f << "CELL_TYPES " << mesh.tris.size() << "\n";
  for (std::size_t t = 0; t < mesh.tris.size(); ++t) f << "22\n";
  f << "CELL_DATA " << mesh.tris.size() << "\nSCALARS region int 1\nLOOKUP_TABLE default\n";
  for (Region r : mesh.region) f << static_cast<int>(r) << "\n";
  if (!field.empty()) {
    f << "POINT_DATA " << mesh.nodes.size() << "\nSCALARS u_real double 1\nLOOKUP_TABLE default\n";
    for (const auto& u : field) f << u.real() << "\n";
    f << "SCALARS u_imag double 1\nLOOKUP_TABLE default\n";
    for (const auto& u : field) f << u.imag() << "\n";
  }
}

}  // namespace cpml
