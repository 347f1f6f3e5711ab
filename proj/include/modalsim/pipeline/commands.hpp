#pragma once

#include <string>

#include "modalsim/fitting/mesh_edit.hpp"
#include "modalsim/fitting/snake.hpp"
#include "modalsim/pipeline/config.hpp"
#include "modalsim/pipeline/report.hpp"
#include "modalsim/tracking/trajectory.hpp"

namespace modalsim::pipeline {

// Mesh + material + selections + reduced basis assembled from a config.
struct LoadedModel {
    mesh::TetMesh mesh;
    fem::MaterialParams material;
    bool material_defaulted = false;
    mesh::NodeSelection anchors;
    mesh::NodeSelection constraints;
    fem::SystemMatrices matrices;
    modal::ModalBasis basis;
    bool basis_from_cache = false;
};

mesh::TetMesh mesh_from_config(const Config& config);
mesh::NodeSelection selection_from_config(const Config& config, const std::string& section,
                                          const mesh::TetMesh& mesh, mesh::NodeRole role);
// needs_constraints controls whether [constraints] is required.
LoadedModel build_model(const Config& config, bool needs_basis, bool needs_constraints);

struct FitOutcome {
    mesh::TetMesh edited;
    int planes_fitted = 0;
    int control_points = 0;
    double mean_residual_mm = 0.0;
    double max_residual_mm = 0.0;
    double max_node_move_m = 0.0;
    std::string node_path, ele_path, report_path;
};

struct TrackOutcome {
    tracking::TrackedTrajectorySet tracks;
    std::string csv_path;
    int total_lost_frames = 0;
};

struct SimulateOutcome {
    dynamics::DeformationSequence sequence;
    DiagnosticsReport report;
    std::string output_dir;
    std::string report_path;
    int frames_written = 0;
    bool material_defaulted = false;
};

struct BenchOutcome {
    int nodes = 0;
    int free_dofs = 0;
    int modes = 0;
    int timed_steps = 0;
    double steps_per_second = 0.0;
    double reduced_solve_ms_per_step = 0.0;
    double reconstruct_ms_per_step = 0.0;
};

// Reference throughput printed next to bench/simulate results for context.
constexpr double kReferenceFps = 43.2;

FitOutcome cmd_fit(const Config& config);
TrackOutcome cmd_track(const Config& config);
SimulateOutcome cmd_simulate(const Config& config);
BenchOutcome cmd_bench(const Config& config);

} // namespace modalsim::pipeline
