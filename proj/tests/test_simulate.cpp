#include <doctest.h>

#include <cmath>

#include "modalsim/dynamics/simulate.hpp"
#include "modalsim/error.hpp"

using namespace modalsim;

namespace {

struct Rig {
    mesh::TetMesh mesh;
    fem::MaterialParams material;
    fem::SystemMatrices matrices;
    modal::ModalBasis basis;
    std::vector<int> top_nodes;

    explicit Rig(int nx = 6, int ny = 2, int nz = 2, int modes = 12) {
        mesh = mesh::make_bar_mesh(nx, ny, nz, 0.01, 0.01, 0.01);
        material.young_modulus = 15e3;
        material.poisson_ratio = 0.45;
        material.density = 1040.0;
        material.rayleigh_mass = 1.0;
        material.rayleigh_stiffness = 1e-3;

        mesh::NodeSelection anchors{mesh::NodeRole::anchor, {}};
        for (int i = 0; i < mesh.node_count(); ++i)
            if (mesh.nodes[i].z() == 0.0)
                anchors.ids.push_back(i);
        matrices = fem::assemble(mesh, material, anchors);
        basis = modal::compute_modal_basis(matrices, modes);

        const double top = nz * 0.01;
        const double mid_y = ny * 0.01 / 2.0;
        for (int i = 0; i < mesh.node_count(); ++i)
            if (mesh.nodes[i].z() == top && mesh.nodes[i].y() == mid_y)
                top_nodes.push_back(i);
    }

    dynamics::ConstraintTimeline bump_timeline(int n_frames, double amplitude) const {
        dynamics::ConstraintTimeline timeline;
        timeline.node_ids = {top_nodes[1], top_nodes[top_nodes.size() - 2]};
        timeline.frame_rate = 60.0;
        timeline.frames.resize(n_frames);
        for (int f = 0; f < n_frames; ++f) {
            const double phase = static_cast<double>(f) / (n_frames - 1);
            const double s = std::sin(3.14159265358979323846 * phase);
            timeline.frames[f].assign(timeline.node_ids.size(),
                                      Eigen::Vector3d(0, 0, amplitude * s * s));
        }
        return timeline;
    }
};

} // namespace

TEST_CASE("zero targets keep the body at rest") {
    Rig rig;
    dynamics::ConstraintTimeline timeline;
    timeline.node_ids = {rig.top_nodes[0]};
    timeline.frame_rate = 60.0;
    timeline.frames.assign(30, {Eigen::Vector3d::Zero()});

    const auto seq = dynamics::simulate(rig.mesh, rig.matrices, rig.basis, rig.material,
                                        timeline, {});
    REQUIRE(static_cast<int>(seq.frames.size()) == 30);
    for (const auto& frame : seq.frames)
        CHECK(frame.isZero(0.0));
    for (const auto& diag : seq.diagnostics) {
        CHECK(diag.volume_ratio == 0.0);
        CHECK(diag.constraint_error == 0.0);
    }
}

TEST_CASE("single-frame timeline produces exactly one frame") {
    Rig rig;
    dynamics::ConstraintTimeline timeline;
    timeline.node_ids = {rig.top_nodes[0]};
    timeline.frame_rate = 60.0;
    timeline.frames.assign(1, {Eigen::Vector3d::Zero()});
    const auto seq = dynamics::simulate(rig.mesh, rig.matrices, rig.basis, rig.material,
                                        timeline, {});
    CHECK(seq.frames.size() == 1);
}

TEST_CASE("first frame must start from rest") {
    Rig rig;
    dynamics::ConstraintTimeline timeline;
    timeline.node_ids = {rig.top_nodes[0]};
    timeline.frame_rate = 60.0;
    timeline.frames.assign(3, {Eigen::Vector3d(0, 0, 0.001)});
    CHECK_THROWS_AS(
        dynamics::simulate(rig.mesh, rig.matrices, rig.basis, rig.material, timeline, {}),
        ValidationError);
}

TEST_CASE("constraints are satisfied at every output frame") {
    Rig rig;
    const auto timeline = rig.bump_timeline(40, 0.002);

    for (int substeps : {1, 4}) {
        dynamics::SimulationOptions options;
        options.substeps = substeps;
        const auto seq = dynamics::simulate(rig.mesh, rig.matrices, rig.basis, rig.material,
                                            timeline, options);
        for (const auto& diag : seq.diagnostics)
            CHECK(diag.constraint_error < 1e-9);
    }
}

TEST_CASE("simulation is deterministic") {
    Rig rig;
    const auto timeline = rig.bump_timeline(25, 0.002);
    const auto a = dynamics::simulate(rig.mesh, rig.matrices, rig.basis, rig.material,
                                      timeline, {});
    const auto b = dynamics::simulate(rig.mesh, rig.matrices, rig.basis, rig.material,
                                      timeline, {});
    REQUIRE(a.frames.size() == b.frames.size());
    for (std::size_t f = 0; f < a.frames.size(); ++f)
        CHECK(a.frames[f] == b.frames[f]); // bitwise
}

TEST_CASE("warping toggle changes the output field but not the drive") {
    Rig rig(8, 2, 2, 16);
    const auto timeline = rig.bump_timeline(50, 0.004);

    dynamics::SimulationOptions warped_opts;
    warped_opts.warping = true;
    dynamics::SimulationOptions linear_opts;
    linear_opts.warping = false;

    const auto warped = dynamics::simulate(rig.mesh, rig.matrices, rig.basis, rig.material,
                                           timeline, warped_opts);
    const auto linear = dynamics::simulate(rig.mesh, rig.matrices, rig.basis, rig.material,
                                           timeline, linear_opts);
    // same reduced trajectory, different reconstruction
    double max_diff = 0.0;
    for (std::size_t f = 0; f < warped.frames.size(); ++f)
        max_diff = std::max(max_diff,
                            (warped.frames[f] - linear.frames[f]).cwiseAbs().maxCoeff());
    CHECK(max_diff > 0.0);
    for (const auto& diag : warped.diagnostics)
        CHECK(diag.constraint_error < 1e-9); // exactness is on the linear field
}

TEST_CASE("large bending: the warped tip curves and keeps volume closer to rest") {
    // 0.4 m cantilever, tip driven far downward on the same reduced trajectory
    const auto m = mesh::make_bar_mesh(16, 2, 2, 0.025, 0.01, 0.01);
    fem::MaterialParams mat;
    mat.young_modulus = 15e3;
    mat.poisson_ratio = 0.49;
    mat.density = 1040.0;
    mat.rayleigh_mass = 1.0;
    mat.rayleigh_stiffness = 1e-3;

    mesh::NodeSelection anchors{mesh::NodeRole::anchor, {}};
    for (int i = 0; i < m.node_count(); ++i)
        if (m.nodes[i].x() == 0.0)
            anchors.ids.push_back(i);
    const auto sys = fem::assemble(m, mat, anchors);
    const auto basis = modal::compute_modal_basis(sys, 30);

    std::vector<int> tip;
    int tip_probe = -1;
    for (int i = 0; i < m.node_count(); ++i)
        if (std::abs(m.nodes[i].x() - 0.4) < 1e-12 &&
            std::abs(m.nodes[i].z() - 0.02) < 1e-12) {
            tip.push_back(i);
            tip_probe = i;
        }
    REQUIRE(tip.size() >= 2);

    dynamics::ConstraintTimeline timeline;
    timeline.node_ids = tip;
    timeline.frame_rate = 60.0;
    const int frames = 97;
    timeline.frames.resize(frames);
    for (int f = 0; f < frames; ++f) {
        const double phase = static_cast<double>(f) / (frames - 1);
        const double s = std::sin(3.14159265358979323846 * phase);
        timeline.frames[f].assign(tip.size(), Eigen::Vector3d(0, 0, -0.12 * s * s));
    }

    dynamics::SimulationOptions warped_opts;
    warped_opts.warping = true;
    dynamics::SimulationOptions linear_opts;
    linear_opts.warping = false;

    const auto warped = dynamics::simulate(m, sys, basis, mat, timeline, warped_opts);
    const auto linear = dynamics::simulate(m, sys, basis, mat, timeline, linear_opts);

    // a free (unconstrained) surface node near the tip shows the curving path
    int probe = -1;
    for (int i = 0; i < m.node_count(); ++i)
        if (std::abs(m.nodes[i].x() - 0.375) < 1e-12 &&
            std::abs(m.nodes[i].z() - 0.02) < 1e-12 && m.nodes[i].y() == 0.0)
            probe = i;
    REQUIRE(probe >= 0);
    (void)tip_probe;

    auto path_length = [&](const dynamics::DeformationSequence& seq, int node) {
        double length = 0.0;
        for (std::size_t f = 1; f < seq.frames.size(); ++f)
            length += (seq.frames[f].segment<3>(3 * node) -
                       seq.frames[f - 1].segment<3>(3 * node))
                          .norm();
        return length;
    };
    // the warped trajectory bends into the bar (foreshortening), so its path
    // is strictly longer than the straight linear-modal path
    CHECK(path_length(warped, probe) > path_length(linear, probe));

    CHECK(warped.max_abs_volume_ratio() < linear.max_abs_volume_ratio());
}

TEST_CASE("snap option pins warped constrained nodes to their targets") {
    Rig rig(8, 2, 2, 16);
    const auto timeline = rig.bump_timeline(30, 0.004);
    dynamics::SimulationOptions options;
    options.snap_constraints = true;
    const auto seq = dynamics::simulate(rig.mesh, rig.matrices, rig.basis, rig.material,
                                        timeline, options);
    for (std::size_t f = 0; f < seq.frames.size(); ++f)
        for (std::size_t c = 0; c < timeline.node_ids.size(); ++c) {
            const Eigen::Vector3d got =
                seq.frames[f].segment<3>(3 * timeline.node_ids[c]);
            CHECK((got - timeline.frames[f][c]).norm() < 1e-15);
        }
}

TEST_CASE("gravity produces static sag") {
    Rig rig;
    dynamics::ConstraintTimeline timeline;
    timeline.node_ids = {rig.top_nodes[0]};
    timeline.frame_rate = 60.0;
    timeline.frames.assign(90, {Eigen::Vector3d::Zero()});

    dynamics::SimulationOptions options;
    options.gravity = Eigen::Vector3d(0, 0, -9.81);
    const auto seq = dynamics::simulate(rig.mesh, rig.matrices, rig.basis, rig.material,
                                        timeline, options);
    // pinned node obeys its (zero) target, the free tip sags downward
    const auto& last = seq.frames.back();
    CHECK(last.segment<3>(3 * timeline.node_ids[0]).norm() < 1e-9);
    double min_uz = 0.0;
    for (int i = 0; i < rig.mesh.node_count(); ++i)
        min_uz = std::min(min_uz, last[3 * i + 2]);
    CHECK(min_uz < -1e-6);
}

TEST_CASE("timeline validation") {
    Rig rig;
    dynamics::ConstraintTimeline timeline;
    timeline.frame_rate = 60.0;

    SUBCASE("empty timeline") {
        timeline.node_ids = {rig.top_nodes[0]};
        CHECK_THROWS_AS(dynamics::simulate(rig.mesh, rig.matrices, rig.basis, rig.material,
                                           timeline, {}),
                        ValidationError);
    }
    SUBCASE("anchored node in the timeline") {
        int anchored = -1;
        for (int i = 0; i < rig.mesh.node_count(); ++i)
            if (rig.matrices.node_rank[i] < 0)
                anchored = i;
        timeline.node_ids = {anchored};
        timeline.frames.assign(3, {Eigen::Vector3d::Zero()});
        CHECK_THROWS_AS(dynamics::simulate(rig.mesh, rig.matrices, rig.basis, rig.material,
                                           timeline, {}),
                        ValidationError);
    }
    SUBCASE("ragged frame") {
        timeline.node_ids = {rig.top_nodes[0], rig.top_nodes[1]};
        timeline.frames.assign(3, {Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()});
        timeline.frames[2].pop_back();
        CHECK_THROWS_AS(dynamics::simulate(rig.mesh, rig.matrices, rig.basis, rig.material,
                                           timeline, {}),
                        ValidationError);
    }
    SUBCASE("bad substeps") {
        timeline.node_ids = {rig.top_nodes[0]};
        timeline.frames.assign(3, {Eigen::Vector3d::Zero()});
        dynamics::SimulationOptions options;
        options.substeps = 0;
        CHECK_THROWS_AS(dynamics::simulate(rig.mesh, rig.matrices, rig.basis, rig.material,
                                           timeline, options),
                        ValidationError);
    }
}
