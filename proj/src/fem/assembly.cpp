#include "modalsim/fem/assembly.hpp"

#include <unordered_set>

#include <Eigen/Dense>

#include "modalsim/error.hpp"

namespace modalsim::fem {

namespace {
constexpr double kDegenerateVolume = 1e-18; // m^3
}

void MaterialParams::validate() const {
    if (!(young_modulus > 0))
        throw ValidationError("material: young_modulus must be > 0");
    if (!(poisson_ratio >= 0 && poisson_ratio < 0.5))
        throw ValidationError("material: poisson_ratio must be in [0, 0.5)");
    if (!(density > 0))
        throw ValidationError("material: density must be > 0");
    if (!(rayleigh_mass >= 0))
        throw ValidationError("material: rayleigh_mass must be >= 0");
    if (!(rayleigh_stiffness >= 0))
        throw ValidationError("material: rayleigh_stiffness must be >= 0");
}

double MaterialParams::lame_lambda() const {
    return young_modulus * poisson_ratio /
           ((1.0 + poisson_ratio) * (1.0 - 2.0 * poisson_ratio));
}

double MaterialParams::lame_mu() const {
    return young_modulus / (2.0 * (1.0 + poisson_ratio));
}

Eigen::VectorXd SystemMatrices::expand(const Eigen::VectorXd& reduced) const {
    if (reduced.size() != free_dof_count())
        throw ValidationError("expand: reduced vector length " +
                              std::to_string(reduced.size()) + " != " +
                              std::to_string(free_dof_count()));
    Eigen::VectorXd full = Eigen::VectorXd::Zero(3 * n_nodes);
    for (int d = 0; d < 3 * n_nodes; ++d)
        if (free_dof_map[d] >= 0)
            full[d] = reduced[free_dof_map[d]];
    return full;
}

Eigen::VectorXd SystemMatrices::gather(const Eigen::VectorXd& full) const {
    if (full.size() != 3 * n_nodes)
        throw ValidationError("gather: full vector length " + std::to_string(full.size()) +
                              " != " + std::to_string(3 * n_nodes));
    Eigen::VectorXd reduced(free_dof_count());
    for (int d = 0; d < 3 * n_nodes; ++d)
        if (free_dof_map[d] >= 0)
            reduced[free_dof_map[d]] = full[d];
    return reduced;
}

TetShape tet_shape(const mesh::TetMesh& mesh, int tet_index) {
    const auto& tet = mesh.tets[tet_index];
    const Eigen::Vector3d& x0 = mesh.nodes[tet[0]];
    Eigen::Matrix3d jac;
    jac.col(0) = mesh.nodes[tet[1]] - x0;
    jac.col(1) = mesh.nodes[tet[2]] - x0;
    jac.col(2) = mesh.nodes[tet[3]] - x0;

    TetShape shape;
    shape.volume = jac.determinant() / 6.0;

    // x = x0 + J*(l1,l2,l3): gradient of l_i is row i of J^-1.
    const Eigen::Matrix3d jinv = jac.inverse();
    shape.grads.col(1) = jinv.row(0).transpose();
    shape.grads.col(2) = jinv.row(1).transpose();
    shape.grads.col(3) = jinv.row(2).transpose();
    shape.grads.col(0) = -(shape.grads.col(1) + shape.grads.col(2) + shape.grads.col(3));
    return shape;
}

SystemMatrices assemble(const mesh::TetMesh& mesh, const MaterialParams& material,
                        const mesh::NodeSelection& anchors) {
    material.validate();

    const int n = mesh.node_count();
    std::unordered_set<int> anchored(anchors.ids.begin(), anchors.ids.end());
    for (int id : anchors.ids)
        if (id < 0 || id >= n)
            throw ValidationError("anchor node " + std::to_string(id) + " out of range");

    SystemMatrices sys;
    sys.n_nodes = n;
    sys.node_rank.assign(n, -1);
    int rank = 0;
    for (int i = 0; i < n; ++i)
        if (!anchored.count(i))
            sys.node_rank[i] = rank++;
    sys.n_free = rank;
    if (sys.n_free == 0)
        throw ValidationError("empty system: every node is anchored");

    sys.free_dof_map.assign(3 * n, -1);
    for (int i = 0; i < n; ++i)
        if (sys.node_rank[i] >= 0)
            for (int c = 0; c < 3; ++c)
                sys.free_dof_map[3 * i + c] = 3 * sys.node_rank[i] + c;

    const double lambda = material.lame_lambda();
    const double mu = material.lame_mu();

    Eigen::Matrix<double, 6, 6> hooke = Eigen::Matrix<double, 6, 6>::Zero();
    hooke.block<3, 3>(0, 0).setConstant(lambda);
    hooke.block<3, 3>(0, 0) += 2.0 * mu * Eigen::Matrix3d::Identity();
    hooke.block<3, 3>(3, 3) = mu * Eigen::Matrix3d::Identity();

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(mesh.tets.size() * 144);
    sys.mass = Eigen::VectorXd::Zero(3 * sys.n_free);

    Eigen::Matrix<double, 6, 12> strain_op;
    for (int t = 0; t < mesh.tet_count(); ++t) {
        const TetShape shape = tet_shape(mesh, t);
        if (shape.volume < kDegenerateVolume)
            throw NumericalError("degenerate element: tet " + std::to_string(t) +
                                 " has volume " + std::to_string(shape.volume) + " m^3");

        strain_op.setZero();
        for (int a = 0; a < 4; ++a) {
            const Eigen::Vector3d g = shape.grads.col(a);
            const int col = 3 * a;
            // engineering strain: (exx, eyy, ezz, gxy, gyz, gzx)
            strain_op(0, col + 0) = g.x();
            strain_op(1, col + 1) = g.y();
            strain_op(2, col + 2) = g.z();
            strain_op(3, col + 0) = g.y();
            strain_op(3, col + 1) = g.x();
            strain_op(4, col + 1) = g.z();
            strain_op(4, col + 2) = g.y();
            strain_op(5, col + 0) = g.z();
            strain_op(5, col + 2) = g.x();
        }

        const Eigen::Matrix<double, 12, 12> ke =
            shape.volume * strain_op.transpose() * hooke * strain_op;

        const auto& tet = mesh.tets[t];
        const double vertex_mass = material.density * shape.volume / 4.0;
        for (int a = 0; a < 4; ++a) {
            const int ra = sys.node_rank[tet[a]];
            if (ra < 0)
                continue;
            for (int c = 0; c < 3; ++c)
                sys.mass[3 * ra + c] += vertex_mass;
            for (int b = 0; b < 4; ++b) {
                const int rb = sys.node_rank[tet[b]];
                if (rb < 0)
                    continue;
                for (int ca = 0; ca < 3; ++ca)
                    for (int cb = 0; cb < 3; ++cb)
                        triplets.emplace_back(3 * ra + ca, 3 * rb + cb,
                                              ke(3 * a + ca, 3 * b + cb));
            }
        }
    }

    for (int i = 0; i < n; ++i)
        if (sys.node_rank[i] >= 0 && sys.mass[3 * sys.node_rank[i]] <= 0.0)
            throw ValidationError("node " + std::to_string(i) +
                                  " is not referenced by any tet");

    sys.stiffness.resize(3 * sys.n_free, 3 * sys.n_free);
    sys.stiffness.setFromTriplets(triplets.begin(), triplets.end());
    sys.stiffness.makeCompressed();
    return sys;
}

Eigen::VectorXd damping_coefficients(const MaterialParams& material,
                                     const Eigen::VectorXd& eigenvalues) {
    return (material.rayleigh_mass +
            material.rayleigh_stiffness * eigenvalues.array()).matrix();
}

Eigen::VectorXd expand_free_vector(const SystemMatrices& matrices,
                                   const Eigen::VectorXd& reduced) {
    return matrices.expand(reduced);
}

} // namespace modalsim::fem
