#pragma once

// Gmsh MSH 2.2 ASCII subset and legacy VTK output. See docs/msh_format.md.

#include <complex>
#include <string>
#include <vector>

#include "cornerpml/mesh.hpp"

namespace cpml {

/// Physical tags used for triangles in MSH files.
inline constexpr int kMshDielectric = 100;
inline constexpr int kMshMetal = 101;

/// Reads 3-node triangles (type 2), 2-node boundary lines (type 1) and
/// ignores points (type 15). P2 midpoints are added after reading. When
/// `polygon` is given, region purity is validated against it.
Mesh import_msh(const std::string& path, const std::vector<Vec2>* polygon = nullptr);
Mesh parse_msh(const std::string& text, const std::vector<Vec2>* polygon = nullptr);

/// Writes the vertex mesh (P1 view) with 17 significant digits.
void export_msh(const Mesh& mesh, const std::string& path);
std::string format_msh(const Mesh& mesh);

/// Legacy VTK unstructured grid of quadratic triangles; the field, when not
/// empty, has one value per node and is written as real and imaginary arrays.
void export_vtk(const Mesh& mesh, const std::string& path,
                const std::vector<std::complex<double>>& field = {});

}  // namespace cpml
