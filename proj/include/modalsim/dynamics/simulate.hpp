#pragma once

#include <vector>

#include <Eigen/Core>

#include "modalsim/dynamics/newmark.hpp"
#include "modalsim/dynamics/warp.hpp"

namespace modalsim::dynamics {

struct SimulationOptions {
    int substeps = 1;            // simulation dt = 1/(frame_rate * substeps)
    bool warping = true;
    bool snap_constraints = false; // post-project warped constrained nodes onto targets
    Eigen::Vector3d gravity = Eigen::Vector3d::Zero(); // m/s^2
};

struct FrameDiagnostics {
    double time = 0.0;            // s
    double volume = 0.0;          // m^3
    double volume_ratio = 0.0;    // (V - V0) / V0
    double step_ms = 0.0;         // integration + reconstruction wall clock
    double constraint_error = 0.0; // max |linear u - target| over driven nodes, m
};

// One full-node displacement field per timeline frame (warped when warping is
// enabled) plus per-frame diagnostics.
struct DeformationSequence {
    std::vector<Eigen::VectorXd> frames; // each 3*n_nodes
    std::vector<FrameDiagnostics> diagnostics;
    double rest_volume = 0.0;
    int mode_count = 0;

    double max_abs_volume_ratio() const;
    double mean_fps() const;
};

// Advances the reduced model through the timeline, one output frame per
// timeline frame, targets interpolated linearly across substeps. The body
// starts at rest, so the first timeline frame must hold zero targets.
DeformationSequence simulate(const mesh::TetMesh& mesh,
                             const fem::SystemMatrices& matrices,
                             const modal::ModalBasis& basis,
                             const fem::MaterialParams& material,
                             const ConstraintTimeline& timeline,
                             const SimulationOptions& options);

} // namespace modalsim::dynamics
