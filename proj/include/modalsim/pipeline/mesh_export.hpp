#pragma once

#include <string>

#include <Eigen/Core>

#include "modalsim/mesh/tet_mesh.hpp"

namespace modalsim::pipeline {

// Wavefront OBJ of the deformed boundary surface only. Vertices are
// rest + displacement; faces reference surface nodes reindexed from 1.
void write_obj_surface(const mesh::TetMesh& mesh, const Eigen::VectorXd& displacements,
                       const std::string& path);

// Legacy-VTK ASCII unstructured grid: rest points, full tet connectivity,
// and the per-node displacement field as POINT_DATA VECTORS.
void write_vtk_unstructured(const mesh::TetMesh& mesh, const Eigen::VectorXd& displacements,
                            const std::string& path);

} // namespace modalsim::pipeline
