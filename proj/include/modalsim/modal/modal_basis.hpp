#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "modalsim/fem/assembly.hpp"

namespace modalsim::modal {

// Truncated mass-orthonormal eigenbasis of the (K, M) pencil.
// phi^T M phi = I, phi^T K phi = diag(lambda), lambda ascending.
struct ModalBasis {
    Eigen::MatrixXd phi;    // 3*n_free x r, column per mode
    Eigen::VectorXd lambda; // rad^2/s^2
    int clamped_modes = 0;  // near-zero eigenvalues clamped to 0 (under-anchoring hint)

    int mode_count() const { return static_cast<int>(lambda.size()); }
    Eigen::Index dof_count() const { return phi.rows(); }
};

struct ModalOptions {
    // Dense solve at or below this many DOFs, shift-invert Lanczos above.
    int dense_threshold = 3000;
    double residual_tol = 1e-9;
    int max_subspace = 0; // 0 = automatic
    std::uint64_t lanczos_seed = 0x9e3779b97f4a7c15ull;
};

// r smallest-eigenvalue pairs of K phi = M phi lambda. Sign convention:
// each column's entry of largest magnitude is positive.
ModalBasis compute_modal_basis(const fem::SystemMatrices& matrices, int r,
                               const ModalOptions& options = {});

// u = phi * q
Eigen::VectorXd reconstruct_displacement(const ModalBasis& basis,
                                         const Eigen::VectorXd& q);

// phi^T * f
Eigen::VectorXd reduce_force(const ModalBasis& basis, const Eigen::VectorXd& f);

// --- basis cache -----------------------------------------------------------
// Binary blob (host-endian) keyed by a content hash of mesh + material +
// anchors, so repeated runs skip the eigensolve. A cache built with more
// modes than requested is sliced down.

std::uint64_t system_content_hash(const mesh::TetMesh& mesh,
                                  const fem::MaterialParams& material,
                                  const mesh::NodeSelection& anchors);

void save_basis_cache(const std::string& path, std::uint64_t content_hash,
                      const ModalBasis& basis);

std::optional<ModalBasis> load_basis_cache(const std::string& path,
                                           std::uint64_t content_hash, int r);

} // namespace modalsim::modal
