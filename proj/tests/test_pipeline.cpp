#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "modalsim/error.hpp"
#include "modalsim/pipeline/commands.hpp"
#include "modalsim/pipeline/mesh_export.hpp"
#include "modalsim/tracking/speckle_synth.hpp"

using namespace modalsim;
namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
    const fs::path dir = fs::temp_directory_path() / "modalsim_pipeline_tests";
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

std::string read_first_line(const fs::path& path) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    return line;
}

} // namespace

TEST_CASE("config parsing") {
    const auto config = pipeline::Config::parse_string(
        "# comment\n"
        "[mesh]\n"
        "bar = 2 2 2 0.1 0.1 0.1   # trailing comment\n"
        "[material]\n"
        "young_modulus = 1.5e4\n"
        "[simulate]\n"
        "warp = true\n"
        "gravity = 0 0 -9.81\n"
        "substeps = 3\n");

    CHECK(config.has_section("mesh"));
    CHECK(config.get_double("material", "young_modulus") == doctest::Approx(1.5e4));
    CHECK(config.get_bool("simulate", "warp") == true);
    CHECK(config.get_int("simulate", "substeps") == 3);
    CHECK((*config.get_vec3("simulate", "gravity") - Eigen::Vector3d(0, 0, -9.81)).norm() ==
          0.0);
    CHECK_FALSE(config.get_string("mesh", "node").has_value());
    CHECK_NOTHROW(config.check_known_keys());
}

TEST_CASE("config rejects malformed and unknown content") {
    CHECK_THROWS_AS(pipeline::Config::parse_string("key = 1\n"), ValidationError);
    CHECK_THROWS_AS(pipeline::Config::parse_string("[unterminated\n"), ValidationError);

    const auto bad_number = pipeline::Config::parse_string("[material]\ndensity = soft\n");
    CHECK_THROWS_AS(bad_number.get_double("material", "density"), ValidationError);

    const auto unknown_key =
        pipeline::Config::parse_string("[material]\nyoungs = 1\n");
    CHECK_THROWS_WITH_AS(unknown_key.check_known_keys(), doctest::Contains("youngs"),
                         ValidationError);

    const auto unknown_section = pipeline::Config::parse_string("[materials]\n");
    CHECK_THROWS_AS(unknown_section.check_known_keys(), ValidationError);
}

TEST_CASE("mesh and selection resolution from config") {
    const auto config = pipeline::Config::parse_string(
        "[mesh]\n"
        "bar = 4 2 2 0.05 0.05 0.05\n"
        "[anchors]\n"
        "axis = z\n"
        "coordinate = 0\n"
        "tolerance = 1e-9\n"
        "[constraints]\n"
        "axis = z\n"
        "coordinate = 0.1\n"
        "tolerance = 1e-9\n"
        "take = 4\n");

    const auto mesh = pipeline::mesh_from_config(config);
    CHECK(mesh.node_count() == 5 * 3 * 3);

    const auto anchors =
        pipeline::selection_from_config(config, "anchors", mesh, mesh::NodeRole::anchor);
    CHECK(anchors.ids.size() == 15); // full bottom face

    const auto constraints = pipeline::selection_from_config(config, "constraints", mesh,
                                                             mesh::NodeRole::constraint);
    CHECK(constraints.ids.size() == 4);
    for (int id : constraints.ids)
        CHECK(mesh.nodes[id].z() == doctest::Approx(0.1));

    SUBCASE("explicit ids") {
        auto с = pipeline::Config::parse_string("[constraints]\nids = 1 2 3\n");
        const auto sel =
            pipeline::selection_from_config(с, "constraints", mesh, mesh::NodeRole::constraint);
        CHECK(sel.ids == std::vector<int>{1, 2, 3});
    }
    SUBCASE("two selectors at once") {
        auto c = pipeline::Config::parse_string(
            "[constraints]\nids = 1\nplane = midsagittal\ncoordinate = 0\n");
        CHECK_THROWS_AS(
            pipeline::selection_from_config(c, "constraints", mesh, mesh::NodeRole::constraint),
            ValidationError);
    }
}

TEST_CASE("cmd_track then cmd_simulate on a synthetic drive") {
    const auto dir = work_dir();
    // gentle vertical bump, 40 frames
    const int frames = 40;
    auto motion = tracking::SyntheticMotion::displacement_field(
        [frames](const Eigen::Vector2d&, int k) {
            const double phase = static_cast<double>(k) / (frames - 1);
            const double s = std::sin(3.14159265358979323846 * phase);
            return Eigen::Vector2d(0, -6.0 * s * s);
        });
    const auto seq = tracking::synth_speckle_sequence(128, 96, frames, motion, 0.02, 0.5, 77);
    tracking::save_raw_sequence(seq, (dir / "seq.msraw").string());

    const std::string config_text =
        "[mesh]\n"
        "bar = 10 3 3 0.01 0.01 0.01\n"
        "[material]\n"
        "young_modulus = 15000\n"
        "poisson_ratio = 0.49\n"
        "density = 1040\n"
        "rayleigh_mass = 1.0\n"
        "rayleigh_stiffness = 0.001\n"
        "[anchors]\n"
        "axis = z\ncoordinate = 0\ntolerance = 1e-9\n"
        "[constraints]\n"
        "axis = z\ncoordinate = 0.03\ntolerance = 1e-9\ntake = 3\n"
        "[modal]\n"
        "modes = 30\n"
        "[tracking]\n"
        "raw = " + (dir / "seq.msraw").string() + "\n"
        "seeds = 30 48 ; 64 48 ; 98 48\n"
        "output_csv = " + (dir / "tracks.csv").string() + "\n"
        "[calibration]\n"
        "mm_per_pixel = 0.5\n"
        "[simulate]\n"
        "format = node\n"
        "output_dir = " + (dir / "frames").string() + "\n"
        "report = " + (dir / "report.csv").string() + "\n";

    const auto config = pipeline::Config::parse_string(config_text, "test.cfg");

    const auto track_outcome = pipeline::cmd_track(config);
    CHECK(track_outcome.tracks.seed_count() == 3);
    CHECK(fs::exists(track_outcome.csv_path));

    const auto sim_outcome = pipeline::cmd_simulate(config);
    CHECK(sim_outcome.frames_written == frames);
    CHECK(sim_outcome.report.max_constraint_error < 1e-9);
    CHECK(sim_outcome.report.max_abs_volume_ratio < 0.02);
    CHECK(fs::exists(sim_outcome.report_path));
    CHECK(read_first_line(sim_outcome.report_path) ==
          "frame,time_s,volume_m3,volume_ratio,step_ms,constraint_err_m");

    SUBCASE("node-format frames round trip bit-identically") {
        const auto frame0 = mesh::load_tet_mesh((dir / "frames/frame_000000.node").string(),
                                                (dir / "frames/frame_000000.ele").string());
        const auto rest = pipeline::mesh_from_config(config);
        REQUIRE(frame0.node_count() == rest.node_count());
        for (int i = 0; i < rest.node_count(); ++i)
            CHECK(frame0.nodes[i] == rest.nodes[i]); // zero first frame, exact rest
    }
}

TEST_CASE("cmd_track recovers integer generator motion in the written csv") {
    const auto dir = work_dir();
    const auto seq = tracking::synth_speckle_sequence(
        128, 96, 8, tracking::SyntheticMotion::translation({2.0, 1.0}), 0.02, 0.5, 91);
    tracking::save_raw_sequence(seq, (dir / "shift.msraw").string());

    const auto config = pipeline::Config::parse_string(
        "[tracking]\n"
        "raw = " + (dir / "shift.msraw").string() + "\n"
        "seeds = 40 40 ; 80 50\n"
        "output_csv = " + (dir / "shift_tracks.csv").string() + "\n");
    const auto outcome = pipeline::cmd_track(config);

    const auto loaded = tracking::load_trajectories_csv(outcome.csv_path);
    REQUIRE(loaded.seed_count() == 2);
    for (int s = 0; s < loaded.seed_count(); ++s)
        for (int f = 1; f < loaded.frame_count(); ++f) {
            const Eigen::Vector2d step =
                loaded.trajectories[s][f] - loaded.trajectories[s][f - 1];
            CHECK((step - Eigen::Vector2d(2.0, 1.0)).cwiseAbs().maxCoeff() < 0.1);
        }
}

TEST_CASE("cmd_track reads numbered pgm directories") {
    const auto dir = work_dir();
    const auto seq = tracking::synth_speckle_sequence(
        96, 72, 5, tracking::SyntheticMotion::translation({1.0, 0.0}), 0.02, 0.5, 95);
    tracking::save_pgm_sequence(seq, (dir / "pgm_frames").string(), "img_%03d.pgm");

    const auto config = pipeline::Config::parse_string(
        "[tracking]\n"
        "images = " + (dir / "pgm_frames").string() + "\n"
        "pattern = img_%03d.pgm\n"
        "frame_rate = 30\n"
        "seeds = 40 36\n"
        "output_csv = " + (dir / "pgm_tracks.csv").string() + "\n");
    const auto outcome = pipeline::cmd_track(config);
    REQUIRE(outcome.tracks.frame_count() == 5);
    const Eigen::Vector2d total =
        outcome.tracks.trajectories[0][4] - outcome.tracks.trajectories[0][0];
    CHECK((total - Eigen::Vector2d(4.0, 0.0)).cwiseAbs().maxCoeff() < 0.4);
}

TEST_CASE("cmd_simulate with a zero-motion trajectory csv") {
    const auto dir = work_dir();
    // hand-written trajectory file: 2 static seeds, 5 frames
    std::string csv = "frame,seed_id,x_px,y_px,confidence\n";
    for (int f = 0; f < 5; ++f)
        for (int s = 0; s < 2; ++s)
            csv += std::to_string(f) + "," + std::to_string(s) + ",50,40,1.0\n";
    write_file(dir / "static.csv", csv);

    const auto config = pipeline::Config::parse_string(
        "[mesh]\nbar = 6 2 2 0.01 0.01 0.01\n"
        "[anchors]\naxis = z\ncoordinate = 0\ntolerance = 1e-9\n"
        "[constraints]\naxis = z\ncoordinate = 0.02\ntolerance = 1e-9\ntake = 2\n"
        "[modal]\nmodes = 12\n"
        "[simulate]\n"
        "trajectory_csv = " + (dir / "static.csv").string() + "\n"
        "format = obj\n"
        "output_dir = " + (dir / "static_frames").string() + "\n",
        "static.cfg");

    const auto outcome = pipeline::cmd_simulate(config);
    CHECK(outcome.frames_written == 5);
    CHECK(outcome.report.max_abs_volume_ratio == 0.0);
    for (const auto& frame : outcome.sequence.frames)
        CHECK(frame.isZero(0.0));
    CHECK(fs::exists(dir / "static_frames/frame_000004.obj"));
}

TEST_CASE("simulate drive-source validation") {
    const auto dir = work_dir();
    SUBCASE("no drive source") {
        const auto config = pipeline::Config::parse_string(
            "[mesh]\nbar = 2 2 2 0.1 0.1 0.1\n"
            "[anchors]\naxis = z\ncoordinate = 0\n"
            "[constraints]\naxis = z\ncoordinate = 0.2\ntake = 1\n"
            "[modal]\nmodes = 5\n");
        CHECK_THROWS_WITH_AS(pipeline::cmd_simulate(config),
                             doctest::Contains("drive source"), ValidationError);
    }
    SUBCASE("both drive sources") {
        const auto config = pipeline::Config::parse_string(
            "[mesh]\nbar = 2 2 2 0.1 0.1 0.1\n"
            "[anchors]\naxis = z\ncoordinate = 0\n"
            "[constraints]\naxis = z\ncoordinate = 0.2\ntake = 1\n"
            "[modal]\nmodes = 5\n"
            "[tracking]\nraw = x.msraw\nseeds = 10 10\n"
            "[simulate]\ntrajectory_csv = y.csv\n");
        CHECK_THROWS_AS(pipeline::cmd_simulate(config), ValidationError);
    }
    SUBCASE("missing trajectory file is caught before compute") {
        const auto config = pipeline::Config::parse_string(
            "[mesh]\nbar = 2 2 2 0.1 0.1 0.1\n"
            "[anchors]\naxis = z\ncoordinate = 0\n"
            "[constraints]\naxis = z\ncoordinate = 0.2\ntake = 1\n"
            "[modal]\nmodes = 5\n"
            "[simulate]\ntrajectory_csv = " + (dir / "absent.csv").string() + "\n");
        CHECK_THROWS_AS(pipeline::cmd_simulate(config), ValidationError);
    }
}

TEST_CASE("cmd_fit on matching and shifted contours") {
    const auto dir = work_dir();
    const auto mesh = mesh::make_bar_mesh(6, 2, 2, 0.01, 0.01, 0.01);

    // contour from the actual midsagittal section at x = 0.03
    const auto sel = mesh::select_plane_nodes(mesh, mesh::Plane::midsagittal, 0.03, 1e-9,
                                              mesh::NodeRole::constraint);
    const auto cal = tracking::PlaneCalibration::for_plane(mesh::Plane::midsagittal);

    auto contour_from_nodes = [&](const Eigen::Vector2d& shift_mm) {
        fitting::ContourPolyline contour;
        contour.plane = mesh::Plane::midsagittal;
        for (int id : sel.ids)
            contour.points.push_back(cal.project_to_plane_mm(mesh.nodes[id]) + shift_mm);
        return contour;
    };

    fitting::save_contour_csv(contour_from_nodes({0, 0}), (dir / "same.csv").string());
    fitting::save_contour_csv(contour_from_nodes({0.4, 0}), (dir / "shift.csv").string());

    auto base = [&](double alpha, double beta) {
        return "[mesh]\nbar = 6 2 2 0.01 0.01 0.01\n"
               "[anchors]\naxis = z\ncoordinate = 0\ntolerance = 1e-9\n"
               "[fit]\n"
               "alpha = " + std::to_string(alpha) + "\nbeta = " + std::to_string(beta) +
               "\ngamma = 0.2\nattraction = 1.0\n"
               "max_iterations = 300\ntolerance_mm = 1e-4\n"
               "output_node = " + (dir / "fitted.node").string() + "\n"
               "output_ele = " + (dir / "fitted.ele").string() + "\n"
               "report = " + (dir / "fit_report.csv").string() + "\n";
    };

    SUBCASE("identical contour leaves the mesh unchanged") {
        // attraction-only fit: the control points start at the global minimum
        const auto config = pipeline::Config::parse_string(
            base(0.0, 0.0) + "[fit.midsagittal]\ncontour = " + (dir / "same.csv").string() +
            "\ncoordinate = 0.03\ntolerance = 1e-9\n");
        const auto outcome = pipeline::cmd_fit(config);
        CHECK(outcome.max_node_move_m < 1e-6);
        CHECK(fs::exists(outcome.node_path));
        CHECK(read_first_line(dir / "fit_report.csv") ==
              "plane,point,node_id,residual_mm,disp_mm_x,disp_mm_y");
    }
    SUBCASE("shifted contour pulls the section and reports small residuals") {
        const auto config = pipeline::Config::parse_string(
            base(0.01, 0.01) + "[fit.midsagittal]\ncontour = " + (dir / "shift.csv").string() +
            "\ncoordinate = 0.03\ntolerance = 1e-9\n");
        const auto outcome = pipeline::cmd_fit(config);
        CHECK(outcome.mean_residual_mm < 0.5);
        CHECK(outcome.max_node_move_m > 1e-5); // the mesh moved
        const auto edited = mesh::load_tet_mesh(outcome.node_path, outcome.ele_path);
        CHECK(mesh::total_volume(edited) > 0);
    }
    SUBCASE("missing contour file fails validation before compute") {
        const auto config = pipeline::Config::parse_string(
            base(0.01, 0.01) + "[fit.midsagittal]\ncontour = " + (dir / "absent.csv").string() +
            "\ncoordinate = 0.03\n");
        CHECK_THROWS_AS(pipeline::cmd_fit(config), ValidationError);
    }
    SUBCASE("no plane sections is an error") {
        const auto config = pipeline::Config::parse_string(base(0.01, 0.01));
        CHECK_THROWS_AS(pipeline::cmd_fit(config), ValidationError);
    }
}

TEST_CASE("cmd_bench produces sane throughput numbers") {
    const auto config = pipeline::Config::parse_string(
        "[mesh]\nbar = 6 2 2 0.01 0.01 0.01\n"
        "[anchors]\naxis = z\ncoordinate = 0\ntolerance = 1e-9\n"
        "[constraints]\naxis = z\ncoordinate = 0.02\ntolerance = 1e-9\ntake = 2\n"
        "[modal]\nmodes = 10\n"
        "[bench]\nwarmup = 5\nsteps = 50\n");
    const auto outcome = pipeline::cmd_bench(config);
    CHECK(outcome.modes == 10);
    CHECK(outcome.timed_steps == 50);
    CHECK(outcome.steps_per_second > 0);
    CHECK(outcome.reduced_solve_ms_per_step >= 0);
    CHECK(outcome.reconstruct_ms_per_step >= 0);
}

TEST_CASE("bench scaling: mode count and mesh size") {
    auto bench_config = [](const std::string& bar, int modes, int steps) {
        return pipeline::Config::parse_string(
            "[mesh]\nbar = " + bar + "\n"
            "[anchors]\naxis = z\ncoordinate = 0\ntolerance = 1e-9\n"
            "[constraints]\naxis = z\ncoordinate = 0.06\ntolerance = 1e-9\ntake = 2\n"
            "[modal]\nmodes = " + std::to_string(modes) + "\n"
            "[bench]\nwarmup = 200\nsteps = " + std::to_string(steps) + "\n");
    };

    // microsecond-scale timings: best-of-three keeps scheduler noise out
    auto best_of = [](auto run) {
        auto best = run();
        for (int rep = 1; rep < 3; ++rep) {
            const auto next = run();
            if (next.reduced_solve_ms_per_step < best.reduced_solve_ms_per_step)
                best.reduced_solve_ms_per_step = next.reduced_solve_ms_per_step;
            if (next.reconstruct_ms_per_step < best.reconstruct_ms_per_step)
                best.reconstruct_ms_per_step = next.reconstruct_ms_per_step;
        }
        return best;
    };

    SUBCASE("reduced-solve time grows no worse than O(r^2) in the mode count") {
        const std::string bar = "8 3 3 0.02 0.02 0.02"; // 432 free DOFs
        const auto small =
            best_of([&] { return pipeline::cmd_bench(bench_config(bar, 10, 20000)); });
        const auto large =
            best_of([&] { return pipeline::cmd_bench(bench_config(bar, 150, 20000)); });
        const double ratio =
            large.reduced_solve_ms_per_step / small.reduced_solve_ms_per_step;
        CHECK(ratio < (150.0 / 10.0) * (150.0 / 10.0));
    }
    SUBCASE("at fixed modes, reduced solve stays flat and reconstruction grows "
            "about linearly") {
        const auto small = best_of(
            [&] { return pipeline::cmd_bench(bench_config("8 3 3 0.02 0.02 0.02", 40, 8000)); });
        const auto large = best_of(
            [&] { return pipeline::cmd_bench(bench_config("17 3 3 0.02 0.02 0.02", 40, 8000)); });
        CHECK(large.reduced_solve_ms_per_step / small.reduced_solve_ms_per_step < 2.5);
        CHECK(large.reconstruct_ms_per_step / small.reconstruct_ms_per_step < 4.0);
    }
}

TEST_CASE("obj and vtk exports") {
    const auto dir = work_dir();
    const auto mesh = mesh::make_bar_mesh(2, 1, 1, 0.5, 0.5, 0.5);
    Eigen::VectorXd disp = Eigen::VectorXd::Zero(3 * mesh.node_count());
    disp[2] = 0.25; // node 0 up

    pipeline::write_obj_surface(mesh, disp, (dir / "m.obj").string());
    pipeline::write_vtk_unstructured(mesh, disp, (dir / "m.vtk").string());

    CHECK(read_first_line(dir / "m.obj").rfind("v ", 0) == 0);
    CHECK(read_first_line(dir / "m.vtk") == "# vtk DataFile Version 3.0");

    // vtk carries the displacement vector verbatim
    std::ifstream in(dir / "m.vtk");
    std::string content((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
    CHECK(content.find("VECTORS displacement double") != std::string::npos);
    CHECK(content.find("CELL_TYPES") != std::string::npos);

    // obj face indices stay within the emitted vertex list
    std::ifstream obj(dir / "m.obj");
    int vertices = 0;
    std::string line;
    std::vector<std::array<int, 3>> faces;
    while (std::getline(obj, line)) {
        if (line.rfind("v ", 0) == 0)
            ++vertices;
        else if (line.rfind("f ", 0) == 0) {
            std::array<int, 3> f{};
            REQUIRE(std::sscanf(line.c_str(), "f %d %d %d", &f[0], &f[1], &f[2]) == 3);
            faces.push_back(f);
        }
    }
    CHECK(vertices > 0);
    CHECK(faces.size() == mesh::surface_triangles(mesh).size());
    for (const auto& f : faces)
        for (int idx : f) {
            CHECK(idx >= 1);
            CHECK(idx <= vertices);
        }
}
