#pragma once

#include <utility>
#include <vector>

#include <Eigen/Core>

#include "modalsim/fem/assembly.hpp"
#include "modalsim/tracking/calibration.hpp"

namespace modalsim::fitting {

struct SurfaceTargets {
    std::vector<int> node_ids;
    std::vector<Eigen::Vector3d> displacements; // meters
};

// In-plane snake displacements (mm) mapped to 3D targets in meters through
// the plane embedding; out-of-plane component is zero. One displacement per
// selected node, order-matched.
SurfaceTargets lift_contour_displacements(const mesh::NodeSelection& plane_nodes,
                                          const mesh::TetMesh& mesh,
                                          const std::vector<Eigen::Vector2d>& snake_displacements_mm,
                                          const tracking::PlaneCalibration& calibration);

// Static propagation of a surface edit: minimize 1/2 u^T K u subject to
// u = targets on the listed nodes (anchors stay at zero), then shift the rest
// positions by u. Fails if the edit inverts any element.
mesh::TetMesh propagate_edit(const mesh::TetMesh& mesh,
                             const fem::SystemMatrices& matrices,
                             const SurfaceTargets& targets);

// Elastic energy 1/2 u^T K u of a free-DOF displacement.
double elastic_energy(const fem::SystemMatrices& matrices, const Eigen::VectorXd& u);

} // namespace modalsim::fitting
