#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/Sparse>

#include "modalsim/fem/material.hpp"
#include "modalsim/mesh/tet_mesh.hpp"

namespace modalsim::fem {

// Stiffness and lumped mass over the free degrees of freedom, with anchored
// node components eliminated. DOF ordering is node-major: the free node with
// rank k owns rows 3k..3k+2.
struct SystemMatrices {
    Eigen::SparseMatrix<double> stiffness; // 3*n_free x 3*n_free, N/m
    Eigen::VectorXd mass;                  // diagonal, kg

    int n_nodes = 0; // nodes in the source mesh
    int n_free = 0;  // free (non-anchored) nodes

    // Per-node free rank, -1 for anchored nodes.
    std::vector<int> node_rank;
    // Per-DOF map, length 3*n_nodes: full component index -> reduced index or -1.
    std::vector<int> free_dof_map;

    int free_dof_count() const { return 3 * n_free; }

    // Scatters a reduced vector to the full 3*n_nodes field, zeros at anchors.
    Eigen::VectorXd expand(const Eigen::VectorXd& reduced) const;
    // Gathers the free components of a full 3*n_nodes field.
    Eigen::VectorXd gather(const Eigen::VectorXd& full) const;
};

// Constant-strain linear tetrahedra with isotropic Hooke's law; mass lumped
// as rho*vol/4 per vertex. Assembly order is fixed, so identical inputs give
// bit-identical sparse structure and values.
SystemMatrices assemble(const mesh::TetMesh& mesh, const MaterialParams& material,
                        const mesh::NodeSelection& anchors);

// Per-mode damping d_i = rayleigh_mass + rayleigh_stiffness * lambda_i.
// The damping operator itself is never materialized.
Eigen::VectorXd damping_coefficients(const MaterialParams& material,
                                     const Eigen::VectorXd& eigenvalues);

Eigen::VectorXd expand_free_vector(const SystemMatrices& matrices,
                                   const Eigen::VectorXd& reduced);

// Element shape data used by assembly and by the warp operator.
struct TetShape {
    double volume;
    Eigen::Matrix<double, 3, 4> grads; // gradient of each barycentric function
};

TetShape tet_shape(const mesh::TetMesh& mesh, int tet_index);

} // namespace modalsim::fem
