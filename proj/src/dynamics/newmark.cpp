#include "modalsim/dynamics/newmark.hpp"

#include <set>
#include <unordered_set>

#include "modalsim/error.hpp"

namespace modalsim::dynamics {

namespace {
constexpr double kGamma = 0.5;
constexpr double kBeta = 0.25;
} // namespace

void ConstraintTimeline::validate(const fem::SystemMatrices& matrices) const {
    if (frames.empty())
        throw ValidationError("constraint timeline has no frames");
    if (!(frame_rate > 0))
        throw ValidationError("constraint timeline frame_rate must be > 0");
    std::unordered_set<int> seen;
    for (int id : node_ids) {
        if (id < 0 || id >= matrices.n_nodes)
            throw ValidationError("constraint node " + std::to_string(id) + " out of range");
        if (matrices.node_rank[id] < 0)
            throw ValidationError("constraint node " + std::to_string(id) + " is anchored");
        if (!seen.insert(id).second)
            throw ValidationError("constraint node " + std::to_string(id) + " listed twice");
    }
    for (std::size_t f = 0; f < frames.size(); ++f)
        if (frames[f].size() != node_ids.size())
            throw ValidationError("timeline frame " + std::to_string(f) + " has " +
                                  std::to_string(frames[f].size()) + " targets for " +
                                  std::to_string(node_ids.size()) + " nodes");
}

NewmarkIntegrator::NewmarkIntegrator(const modal::ModalBasis& basis,
                                     const fem::SystemMatrices& matrices,
                                     const fem::MaterialParams& material, double dt,
                                     std::vector<int> constrained_nodes)
    : basis_(basis), dt_(dt), constrained_nodes_(std::move(constrained_nodes)) {
    if (!(dt > 0))
        throw ValidationError("newmark: dt must be > 0");
    if (basis.phi.rows() != matrices.free_dof_count())
        throw ValidationError("newmark: basis and matrices disagree on free DOF count");

    damping_ = fem::damping_coefficients(material, basis.lambda);
    a_diag_ = (1.0 + kGamma * dt_ * damping_.array() +
               kBeta * dt_ * dt_ * basis.lambda.array()).matrix();

    const int c = static_cast<int>(constrained_nodes_.size());
    if (c == 0)
        return;

    std::unordered_set<int> seen;
    g_.resize(3 * c, basis.mode_count());
    for (int i = 0; i < c; ++i) {
        const int node = constrained_nodes_[i];
        if (node < 0 || node >= matrices.n_nodes)
            throw ValidationError("constraint node " + std::to_string(node) + " out of range");
        if (matrices.node_rank[node] < 0)
            throw ValidationError("constraint node " + std::to_string(node) + " is anchored");
        if (!seen.insert(node).second)
            throw NumericalError("constraint rank deficiency: node " + std::to_string(node) +
                                 " constrained twice");
        for (int comp = 0; comp < 3; ++comp)
            g_.row(3 * i + comp) = basis.phi.row(matrices.free_dof_map[3 * node + comp]);
    }

    // Rank check before factorization so redundant constraints are reported
    // with the offending node ids.
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(g_.transpose());
    if (qr.rank() < 3 * c) {
        std::set<int> offending;
        const auto perm = qr.colsPermutation().indices();
        for (int k = qr.rank(); k < 3 * c; ++k)
            offending.insert(constrained_nodes_[perm[k] / 3]);
        std::string ids;
        for (int node : offending) {
            if (!ids.empty())
                ids += ", ";
            ids += std::to_string(node);
        }
        throw NumericalError("constraint rank deficiency involving node(s) " + ids +
                             " (rank " + std::to_string(qr.rank()) + " of " +
                             std::to_string(3 * c) + "); raise the mode count or drop "
                             "dependent constraints");
    }

    g_over_a_ = g_ * a_diag_.cwiseInverse().asDiagonal();
    const Eigen::MatrixXd schur = g_over_a_ * g_.transpose();
    schur_llt_.compute(schur);
    if (schur_llt_.info() != Eigen::Success)
        throw NumericalError("constraint system factorization failed (conflicting or "
                             "redundant constraints)");
}

void NewmarkIntegrator::step(ReducedState& state, const Eigen::VectorXd& reduced_force,
                             const std::vector<Eigen::Vector3d>* targets) const {
    const int r = basis_.mode_count();
    if (state.q.size() != r || state.q_dot.size() != r || state.q_ddot.size() != r)
        throw ValidationError("newmark: state dimension does not match basis");

    const Eigen::VectorXd q_pred =
        state.q + dt_ * state.q_dot + (0.5 - kBeta) * dt_ * dt_ * state.q_ddot;
    const Eigen::VectorXd v_pred = state.q_dot + (1.0 - kGamma) * dt_ * state.q_ddot;

    Eigen::VectorXd b = -damping_.cwiseProduct(v_pred) -
                        basis_.lambda.cwiseProduct(q_pred);
    if (reduced_force.size() != 0) {
        if (reduced_force.size() != r)
            throw ValidationError("newmark: reduced force length mismatch");
        b += reduced_force;
    }

    Eigen::VectorXd q_ddot_new = b.cwiseQuotient(a_diag_);

    const int c = static_cast<int>(constrained_nodes_.size());
    if (c > 0) {
        if (!targets || static_cast<int>(targets->size()) != c)
            throw ValidationError("newmark: constraint targets missing or wrong length");
        Eigen::VectorXd rhs(3 * c);
        for (int i = 0; i < c; ++i)
            rhs.segment<3>(3 * i) = (*targets)[i];
        const Eigen::VectorXd residual =
            (rhs - g_ * q_pred) / (kBeta * dt_ * dt_); // target acceleration term
        const Eigen::VectorXd mu = schur_llt_.solve(g_over_a_ * b - residual);
        q_ddot_new = (b - g_.transpose() * mu).cwiseQuotient(a_diag_);
    } else if (targets) {
        throw ValidationError("newmark: targets supplied to an unconstrained integrator");
    }

    state.q = q_pred + kBeta * dt_ * dt_ * q_ddot_new;
    state.q_dot = v_pred + kGamma * dt_ * q_ddot_new;
    state.q_ddot = q_ddot_new;
    state.time += dt_;
}

void NewmarkIntegrator::initialize_acceleration(ReducedState& state,
                                                const Eigen::VectorXd& reduced_force) const {
    state.q_ddot = -damping_.cwiseProduct(state.q_dot) -
                   basis_.lambda.cwiseProduct(state.q);
    if (reduced_force.size() != 0)
        state.q_ddot += reduced_force;
}

ReducedState newmark_step(const ReducedState& state, const modal::ModalBasis& basis,
                          const fem::SystemMatrices& matrices,
                          const fem::MaterialParams& material,
                          const Eigen::VectorXd& f_free,
                          const FrameConstraints* constraints, double dt) {
    std::vector<int> nodes;
    const std::vector<Eigen::Vector3d>* targets = nullptr;
    if (constraints) {
        if (!constraints->node_ids || !constraints->targets)
            throw ValidationError("newmark_step: constraint node ids and targets required");
        if (constraints->node_ids->size() != constraints->targets->size())
            throw ValidationError("newmark_step: constraint id/target count mismatch");
        nodes = *constraints->node_ids;
        targets = constraints->targets;
    }

    NewmarkIntegrator integrator(basis, matrices, material, dt, std::move(nodes));
    Eigen::VectorXd reduced_force;
    if (f_free.size() != 0)
        reduced_force = modal::reduce_force(basis, f_free);

    ReducedState next = state;
    integrator.step(next, reduced_force, targets);
    return next;
}

} // namespace modalsim::dynamics
