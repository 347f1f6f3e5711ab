#include "modalsim/dynamics/warp.hpp"

#include <vector>

#include "modalsim/error.hpp"
#include "modalsim/simd/kernels.hpp"

namespace modalsim::dynamics {

WarpOperator build_warp_operator(const mesh::TetMesh& mesh,
                                 const fem::SystemMatrices& matrices) {
    if (mesh.node_count() != matrices.n_nodes)
        throw ValidationError("build_warp_operator: mesh and matrices disagree");

    const int n = mesh.node_count();
    std::vector<double> incident_volume(n, 0.0);
    for (int t = 0; t < mesh.tet_count(); ++t) {
        const double vol = fem::tet_shape(mesh, t).volume;
        for (int v : mesh.tets[t])
            incident_volume[v] += vol;
    }

    // Element curl is constant: grad u = sum_a u_a g_a^T, so
    // (curl u)_x = sum_a (u_az g_ay - u_ay g_az), cyclic in (x,y,z).
    // Node i averages incident element curls weighted by element volume.
    std::vector<Eigen::Triplet<double>> triplets;
    for (int t = 0; t < mesh.tet_count(); ++t) {
        const fem::TetShape shape = fem::tet_shape(mesh, t);
        const auto& tet = mesh.tets[t];
        for (int corner = 0; corner < 4; ++corner) {
            const int node = tet[corner];
            const int row_rank = matrices.node_rank[node];
            if (row_rank < 0)
                continue; // rotation proxies are only needed on free nodes
            const double weight = 0.5 * shape.volume / incident_volume[node];
            for (int a = 0; a < 4; ++a) {
                const Eigen::Vector3d g = shape.grads.col(a);
                const int base = 3 * tet[a];
                // columns: (comp of u at node a) -> contribution to w at node
                const int cx = matrices.free_dof_map[base + 0];
                const int cy = matrices.free_dof_map[base + 1];
                const int cz = matrices.free_dof_map[base + 2];
                const int rx = 3 * row_rank + 0;
                const int ry = 3 * row_rank + 1;
                const int rz = 3 * row_rank + 2;
                if (cz >= 0)
                    triplets.emplace_back(rx, cz, weight * g.y());
                if (cy >= 0)
                    triplets.emplace_back(rx, cy, -weight * g.z());
                if (cx >= 0)
                    triplets.emplace_back(ry, cx, weight * g.z());
                if (cz >= 0)
                    triplets.emplace_back(ry, cz, -weight * g.x());
                if (cy >= 0)
                    triplets.emplace_back(rz, cy, weight * g.x());
                if (cx >= 0)
                    triplets.emplace_back(rz, cx, -weight * g.y());
            }
        }
    }

    WarpOperator warp;
    warp.half_curl.resize(matrices.free_dof_count(), matrices.free_dof_count());
    warp.half_curl.setFromTriplets(triplets.begin(), triplets.end());
    warp.half_curl.makeCompressed();
    return warp;
}

Eigen::Matrix3d rotation_from_axis_angle(const Eigen::Vector3d& w) {
    const double angle = w.norm();
    Eigen::Matrix3d cross;
    cross << 0, -w.z(), w.y(),
             w.z(), 0, -w.x(),
             -w.y(), w.x(), 0;
    if (angle < 1e-8) {
        // second-order series; exact identity at w = 0
        return Eigen::Matrix3d::Identity() + cross + 0.5 * (cross * cross);
    }
    const double s = std::sin(angle) / angle;
    const double c = (1.0 - std::cos(angle)) / (angle * angle);
    return Eigen::Matrix3d::Identity() + s * cross + c * (cross * cross);
}

namespace {

void apply_rotations(const Eigen::VectorXd& w, const Eigen::VectorXd& u_linear,
                     Eigen::VectorXd& u_warped) {
    const Eigen::Index n_free = u_linear.size() / 3;
    u_warped.resize(u_linear.size());
    for (Eigen::Index i = 0; i < n_free; ++i) {
        const Eigen::Vector3d wi = w.segment<3>(3 * i);
        const Eigen::Vector3d ui = u_linear.segment<3>(3 * i);
        if (wi.isZero(0.0)) {
            u_warped.segment<3>(3 * i) = ui;
        } else {
            u_warped.segment<3>(3 * i) = rotation_from_axis_angle(wi) * ui;
        }
    }
}

} // namespace

Eigen::VectorXd warp_displacements(const modal::ModalBasis& basis,
                                   const WarpOperator& warp, const Eigen::VectorXd& q) {
    const Eigen::VectorXd u_linear = modal::reconstruct_displacement(basis, q);
    const Eigen::VectorXd w = warp.half_curl * u_linear;
    Eigen::VectorXd u_warped;
    apply_rotations(w, u_linear, u_warped);
    return u_warped;
}

WarpedReconstructor::WarpedReconstructor(const modal::ModalBasis& basis,
                                         const WarpOperator& warp)
    : basis_(basis), warp_phi_(warp.half_curl * basis.phi) {}

void WarpedReconstructor::reconstruct(const Eigen::VectorXd& q, Eigen::VectorXd& u_linear,
                                      Eigen::VectorXd& u_warped) const {
    if (q.size() != basis_.mode_count())
        throw ValidationError("warped reconstruct: q dimension mismatch");
    const auto& kern = simd::active_kernels();
    const auto rows = static_cast<std::size_t>(basis_.phi.rows());
    const auto cols = static_cast<std::size_t>(basis_.phi.cols());

    u_linear.resize(basis_.phi.rows());
    kern.matvec(basis_.phi.data(), rows, cols, q.data(), u_linear.data());

    Eigen::VectorXd w(basis_.phi.rows());
    kern.matvec(warp_phi_.data(), rows, cols, q.data(), w.data());

    apply_rotations(w, u_linear, u_warped);
}

} // namespace modalsim::dynamics
