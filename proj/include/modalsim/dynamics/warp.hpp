#pragma once

#include <Eigen/Core>
#include <Eigen/Sparse>

#include "modalsim/fem/assembly.hpp"
#include "modalsim/modal/modal_basis.hpp"

namespace modalsim::dynamics {

// Maps free-DOF displacements to per-node rotation proxies
// w_i = 1/2 (curl u)(x_i), the volume-weighted average of the constant
// per-element curls of the tets incident to node i. Applied to a uniform
// translation it is exactly zero.
struct WarpOperator {
    Eigen::SparseMatrix<double> half_curl; // 3*n_free x 3*n_free
};

WarpOperator build_warp_operator(const mesh::TetMesh& mesh,
                                 const fem::SystemMatrices& matrices);

Eigen::Matrix3d rotation_from_axis_angle(const Eigen::Vector3d& w);

// Warped reconstruction: u_i = R(w_i) * (phi q)_i with w = W phi q.
// Zero curl reproduces the plain linear reconstruction.
Eigen::VectorXd warp_displacements(const modal::ModalBasis& basis,
                                   const WarpOperator& warp, const Eigen::VectorXd& q);

// Runtime form with W phi precomposed as a dense 3*n_free x r product so each
// frame costs two dense matvecs plus the per-node rotations.
class WarpedReconstructor {
public:
    WarpedReconstructor(const modal::ModalBasis& basis, const WarpOperator& warp);

    // Fills u_linear (phi q) and u_warped; both on free DOFs.
    void reconstruct(const Eigen::VectorXd& q, Eigen::VectorXd& u_linear,
                     Eigen::VectorXd& u_warped) const;

private:
    const modal::ModalBasis& basis_;
    Eigen::MatrixXd warp_phi_; // (W phi), 3*n_free x r
};

} // namespace modalsim::dynamics
