#include "modalsim/fitting/mesh_edit.hpp"

#include <unordered_set>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "modalsim/error.hpp"

namespace modalsim::fitting {

SurfaceTargets lift_contour_displacements(const mesh::NodeSelection& plane_nodes,
                                          const mesh::TetMesh& mesh,
                                          const std::vector<Eigen::Vector2d>& snake_displacements_mm,
                                          const tracking::PlaneCalibration& calibration) {
    calibration.validate();
    if (plane_nodes.ids.size() != snake_displacements_mm.size())
        throw ValidationError("lift_contour_displacements: " +
                              std::to_string(plane_nodes.ids.size()) + " nodes paired with " +
                              std::to_string(snake_displacements_mm.size()) + " displacements");
    for (int id : plane_nodes.ids)
        if (id < 0 || id >= mesh.node_count())
            throw ValidationError("lift_contour_displacements: node " + std::to_string(id) +
                                  " out of range");

    SurfaceTargets targets;
    targets.node_ids = plane_nodes.ids;
    targets.displacements.reserve(snake_displacements_mm.size());
    for (const auto& d : snake_displacements_mm)
        targets.displacements.push_back(calibration.lift_mm(d));
    return targets;
}

mesh::TetMesh propagate_edit(const mesh::TetMesh& mesh,
                             const fem::SystemMatrices& matrices,
                             const SurfaceTargets& targets) {
    if (targets.node_ids.size() != targets.displacements.size())
        throw ValidationError("propagate_edit: id/target count mismatch");
    const int c = static_cast<int>(targets.node_ids.size());
    const int nf = matrices.free_dof_count();

    std::unordered_set<int> seen;
    for (int id : targets.node_ids) {
        if (id < 0 || id >= matrices.n_nodes)
            throw ValidationError("propagate_edit: node " + std::to_string(id) + " out of range");
        if (matrices.node_rank[id] < 0)
            throw ValidationError("propagate_edit: node " + std::to_string(id) + " is anchored");
        if (!seen.insert(id).second)
            throw ValidationError("propagate_edit: node " + std::to_string(id) + " listed twice");
    }

    // KKT saddle point [K S^T; S 0] [u; mu] = [0; t].
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(matrices.stiffness.nonZeros() + 6 * c);
    for (int k = 0; k < matrices.stiffness.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(matrices.stiffness, k); it; ++it)
            trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                              it.value());
    for (int i = 0; i < c; ++i) {
        const int node = targets.node_ids[i];
        for (int comp = 0; comp < 3; ++comp) {
            const int dof = matrices.free_dof_map[3 * node + comp];
            trip.emplace_back(nf + 3 * i + comp, dof, 1.0);
            trip.emplace_back(dof, nf + 3 * i + comp, 1.0);
        }
    }

    Eigen::SparseMatrix<double> kkt(nf + 3 * c, nf + 3 * c);
    kkt.setFromTriplets(trip.begin(), trip.end());
    kkt.makeCompressed();

    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf + 3 * c);
    for (int i = 0; i < c; ++i)
        rhs.segment<3>(nf + 3 * i) = targets.displacements[i];

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(kkt);
    if (lu.info() != Eigen::Success)
        throw NumericalError("propagate_edit: constraint system is singular (redundant or "
                             "conflicting constraints)");
    const Eigen::VectorXd solution = lu.solve(rhs);
    if (!solution.allFinite())
        throw NumericalError("propagate_edit: solve produced non-finite displacements");

    const Eigen::VectorXd full = matrices.expand(solution.head(nf));

    mesh::TetMesh edited = mesh;
    for (int i = 0; i < mesh.node_count(); ++i)
        edited.nodes[i] += full.segment<3>(3 * i);

    std::vector<int> inverted;
    for (int t = 0; t < edited.tet_count(); ++t) {
        const auto& tet = edited.tets[t];
        if (mesh::tet_signed_volume(edited.nodes[tet[0]], edited.nodes[tet[1]],
                                    edited.nodes[tet[2]], edited.nodes[tet[3]]) <= 0)
            inverted.push_back(t);
    }
    if (!inverted.empty()) {
        std::string ids;
        for (std::size_t i = 0; i < inverted.size() && i < 20; ++i) {
            if (!ids.empty())
                ids += ", ";
            ids += std::to_string(inverted[i]);
        }
        if (inverted.size() > 20)
            ids += ", ...";
        throw NumericalError("propagate_edit: edit inverts " + std::to_string(inverted.size()) +
                             " element(s) [" + ids + "]; reduce the edit magnitude");
    }
    return edited;
}

double elastic_energy(const fem::SystemMatrices& matrices, const Eigen::VectorXd& u) {
    if (u.size() != matrices.free_dof_count())
        throw ValidationError("elastic_energy: displacement length mismatch");
    return 0.5 * u.dot(matrices.stiffness * u);
}

} // namespace modalsim::fitting
