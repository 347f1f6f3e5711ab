#pragma once

#include <vector>

#include <Eigen/Core>
#include <Eigen/Dense>

#include "modalsim/fem/assembly.hpp"
#include "modalsim/modal/modal_basis.hpp"

namespace modalsim::dynamics {

struct ReducedState {
    Eigen::VectorXd q, q_dot, q_ddot;
    double time = 0.0;

    static ReducedState rest(int r) {
        return {Eigen::VectorXd::Zero(r), Eigen::VectorXd::Zero(r),
                Eigen::VectorXd::Zero(r), 0.0};
    }
};

// Per-frame target displacements for the driven nodes.
struct ConstraintTimeline {
    std::vector<int> node_ids;
    std::vector<std::vector<Eigen::Vector3d>> frames; // one target per node per frame
    double frame_rate = 60.0;                         // Hz

    int frame_count() const { return static_cast<int>(frames.size()); }
    void validate(const fem::SystemMatrices& matrices) const;
};

struct FrameConstraints {
    const std::vector<int>* node_ids = nullptr;
    const std::vector<Eigen::Vector3d>* targets = nullptr;
};

// Average-acceleration Newmark (gamma = 1/2, beta = 1/4) on the reduced
// system  q'' + diag(d) q' + diag(lambda) q = F,  with displacement
// constraints enforced through Lagrange multipliers in reduced coordinates.
// The KKT system has size r + 3c, so the per-step cost is independent of the
// mesh size. The effective matrix and constraint factorization depend only on
// (dt, constrained node set) and are reused across steps.
class NewmarkIntegrator {
public:
    NewmarkIntegrator(const modal::ModalBasis& basis, const fem::SystemMatrices& matrices,
                      const fem::MaterialParams& material, double dt,
                      std::vector<int> constrained_nodes = {});

    // Advances state by dt. reduced_force is phi^T f (pass an empty vector for
    // no load); targets must match the constrained node list, nullptr when the
    // integrator was built without constraints.
    void step(ReducedState& state, const Eigen::VectorXd& reduced_force,
              const std::vector<Eigen::Vector3d>* targets) const;

    // Consistent initial acceleration from the equation of motion.
    void initialize_acceleration(ReducedState& state,
                                 const Eigen::VectorXd& reduced_force) const;

    double dt() const { return dt_; }
    const std::vector<int>& constrained_nodes() const { return constrained_nodes_; }
    // 3c x r selection of constrained components out of the basis.
    const Eigen::MatrixXd& constraint_matrix() const { return g_; }

private:
    const modal::ModalBasis& basis_;
    double dt_;
    std::vector<int> constrained_nodes_;
    Eigen::VectorXd damping_;   // d_i
    Eigen::VectorXd a_diag_;    // 1 + gamma*dt*d_i + beta*dt^2*lambda_i
    Eigen::MatrixXd g_;         // S * phi
    Eigen::MatrixXd g_over_a_;  // G * diag(1/A)
    Eigen::LLT<Eigen::MatrixXd> schur_llt_;
};

// One-shot convenience wrapper; f_free is the full free-DOF force vector
// (may be empty). For stepping loops prefer a NewmarkIntegrator instance.
ReducedState newmark_step(const ReducedState& state, const modal::ModalBasis& basis,
                          const fem::SystemMatrices& matrices,
                          const fem::MaterialParams& material,
                          const Eigen::VectorXd& f_free,
                          const FrameConstraints* constraints, double dt);

} // namespace modalsim::dynamics
