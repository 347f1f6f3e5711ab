#include "modalsim/pipeline/mesh_export.hpp"

#include <cstdio>
#include <fstream>
#include <unordered_map>

#include "modalsim/error.hpp"

namespace modalsim::pipeline {

namespace {

void check_displacements(const mesh::TetMesh& mesh, const Eigen::VectorXd& displacements) {
    if (displacements.size() != 3 * mesh.node_count())
        throw ValidationError("mesh export: displacement length " +
                              std::to_string(displacements.size()) + " != 3 * " +
                              std::to_string(mesh.node_count()));
}

} // namespace

void write_obj_surface(const mesh::TetMesh& mesh, const Eigen::VectorXd& displacements,
                       const std::string& path) {
    check_displacements(mesh, displacements);
    const auto tris = mesh::surface_triangles(mesh);

    std::unordered_map<int, int> vertex_index; // node id -> 1-based OBJ index
    std::vector<int> vertices;
    for (const auto& tri : tris)
        for (int v : tri)
            if (vertex_index.emplace(v, static_cast<int>(vertices.size()) + 1).second)
                vertices.push_back(v);

    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write OBJ: " + path);
    char buf[128];
    for (int v : vertices) {
        const Eigen::Vector3d p = mesh.nodes[v] + displacements.segment<3>(3 * v);
        std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", p.x(), p.y(), p.z());
        out << buf;
    }
    for (const auto& tri : tris)
        out << "f " << vertex_index.at(tri[0]) << ' ' << vertex_index.at(tri[1]) << ' '
            << vertex_index.at(tri[2]) << '\n';
    if (!out)
        throw IoError("write failed: " + path);
}

void write_vtk_unstructured(const mesh::TetMesh& mesh, const Eigen::VectorXd& displacements,
                            const std::string& path) {
    check_displacements(mesh, displacements);
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write VTK: " + path);

    const int n = mesh.node_count();
    out << "# vtk DataFile Version 3.0\n"
        << "tetrahedral deformation frame\n"
        << "ASCII\n"
        << "DATASET UNSTRUCTURED_GRID\n"
        << "POINTS " << n << " double\n";
    char buf[160];
    for (const auto& p : mesh.nodes) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
        out << buf;
    }
    out << "CELLS " << mesh.tet_count() << ' ' << 5 * mesh.tet_count() << '\n';
    for (const auto& tet : mesh.tets)
        out << "4 " << tet[0] << ' ' << tet[1] << ' ' << tet[2] << ' ' << tet[3] << '\n';
    out << "CELL_TYPES " << mesh.tet_count() << '\n';
    for (int t = 0; t < mesh.tet_count(); ++t)
        out << "10\n";
    out << "POINT_DATA " << n << "\nVECTORS displacement double\n";
    for (int v = 0; v < n; ++v) {
        const Eigen::Vector3d d = displacements.segment<3>(3 * v);
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", d.x(), d.y(), d.z());
        out << buf;
    }
    if (!out)
        throw IoError("write failed: " + path);
}

} // namespace modalsim::pipeline
