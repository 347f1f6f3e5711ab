#include "modalsim/dynamics/simulate.hpp"

#include <chrono>
#include <cmath>

#include "modalsim/error.hpp"

namespace modalsim::dynamics {

double DeformationSequence::max_abs_volume_ratio() const {
    double worst = 0.0;
    for (const auto& d : diagnostics)
        worst = std::max(worst, std::abs(d.volume_ratio));
    return worst;
}

double DeformationSequence::mean_fps() const {
    double total_ms = 0.0;
    int counted = 0;
    for (std::size_t i = 1; i < diagnostics.size(); ++i) {
        total_ms += diagnostics[i].step_ms;
        ++counted;
    }
    return (counted > 0 && total_ms > 0) ? 1000.0 * counted / total_ms : 0.0;
}

DeformationSequence simulate(const mesh::TetMesh& mesh,
                             const fem::SystemMatrices& matrices,
                             const modal::ModalBasis& basis,
                             const fem::MaterialParams& material,
                             const ConstraintTimeline& timeline,
                             const SimulationOptions& options) {
    using clock = std::chrono::steady_clock;

    timeline.validate(matrices);
    if (options.substeps < 1)
        throw ValidationError("simulate: substeps must be >= 1");

    const int n_frames = timeline.frame_count();
    const int n_constrained = static_cast<int>(timeline.node_ids.size());

    for (const auto& target : timeline.frames[0])
        if (target.norm() > 1e-12)
            throw ValidationError("simulate: the first timeline frame must hold zero "
                                  "targets (the body starts at rest in the reference "
                                  "configuration)");

    const double dt = 1.0 / (timeline.frame_rate * options.substeps);
    NewmarkIntegrator integrator(basis, matrices, material, dt, timeline.node_ids);
    const WarpOperator warp = build_warp_operator(mesh, matrices);
    const WarpedReconstructor reconstructor(basis, warp);

    // Constant loads reduce once.
    Eigen::VectorXd reduced_force;
    if (!options.gravity.isZero(0.0)) {
        Eigen::VectorXd f(matrices.free_dof_count());
        for (int i = 0; i < matrices.n_free; ++i)
            f.segment<3>(3 * i) = matrices.mass[3 * i] * options.gravity;
        reduced_force = modal::reduce_force(basis, f);
    }

    ReducedState state = ReducedState::rest(basis.mode_count());
    integrator.initialize_acceleration(state, reduced_force);

    DeformationSequence out;
    out.rest_volume = mesh::total_volume(mesh);
    out.mode_count = basis.mode_count();
    out.frames.reserve(n_frames);
    out.diagnostics.reserve(n_frames);

    Eigen::VectorXd u_linear, u_warped;
    std::vector<Eigen::Vector3d> targets(n_constrained);

    for (int frame = 0; frame < n_frames; ++frame) {
        const auto t0 = clock::now();

        if (frame > 0) {
            const auto& prev = timeline.frames[frame - 1];
            const auto& next = timeline.frames[frame];
            for (int s = 1; s <= options.substeps; ++s) {
                const double blend = static_cast<double>(s) / options.substeps;
                for (int i = 0; i < n_constrained; ++i)
                    targets[i] = (1.0 - blend) * prev[i] + blend * next[i];
                integrator.step(state, reduced_force,
                                n_constrained > 0 ? &targets : nullptr);
            }
        }

        if (!state.q.allFinite())
            throw NumericalError("simulation diverged at frame " + std::to_string(frame));

        if (options.warping) {
            reconstructor.reconstruct(state.q, u_linear, u_warped);
        } else {
            u_linear = modal::reconstruct_displacement(basis, state.q);
            u_warped = u_linear;
        }

        double constraint_error = 0.0;
        for (int i = 0; i < n_constrained; ++i) {
            const int node = timeline.node_ids[i];
            Eigen::Vector3d lin;
            for (int c = 0; c < 3; ++c)
                lin[c] = u_linear[matrices.free_dof_map[3 * node + c]];
            constraint_error = std::max(
                constraint_error, (lin - timeline.frames[frame][i]).norm());
            if (options.snap_constraints && options.warping)
                for (int c = 0; c < 3; ++c)
                    u_warped[matrices.free_dof_map[3 * node + c]] =
                        timeline.frames[frame][i][c];
        }

        const auto t1 = clock::now();

        Eigen::VectorXd full = matrices.expand(u_warped);
        if (!full.allFinite())
            throw NumericalError("simulation diverged at frame " + std::to_string(frame));

        FrameDiagnostics diag;
        diag.time = state.time;
        diag.volume = mesh::total_volume(mesh, full);
        diag.volume_ratio = (diag.volume - out.rest_volume) / out.rest_volume;
        diag.step_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        diag.constraint_error = constraint_error;

        out.frames.push_back(std::move(full));
        out.diagnostics.push_back(diag);
    }

    return out;
}

} // namespace modalsim::dynamics
