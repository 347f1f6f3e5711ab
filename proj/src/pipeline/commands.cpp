#include "modalsim/pipeline/commands.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "modalsim/error.hpp"
#include "modalsim/pipeline/mesh_export.hpp"
#include "modalsim/tracking/image_sequence.hpp"

namespace modalsim::pipeline {

namespace fs = std::filesystem;

namespace {

void make_parent_dirs(const std::string& path) {
    const fs::path parent = fs::path(path).parent_path();
    if (parent.empty())
        return;
    std::error_code ec;
    fs::create_directories(parent, ec);
    if (ec)
        throw IoError("cannot create directory " + parent.string() + ": " + ec.message());
}

void make_output_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create directory " + dir + ": " + ec.message());
}

void require_file(ValidationReport& report, const std::optional<std::string>& path,
                  const std::string& what) {
    if (!path) {
        report.add("missing " + what);
        return;
    }
    if (!fs::exists(*path))
        report.add(what + " does not exist: " + *path);
}

mesh::Plane plane_from_name(const std::string& name, const std::string& context) {
    if (name == "midsagittal")
        return mesh::Plane::midsagittal;
    if (name == "coronal")
        return mesh::Plane::coronal;
    throw ValidationError(context + ": plane must be 'midsagittal' or 'coronal', got '" +
                          name + "'");
}

int axis_from_name(const std::string& name, const std::string& context) {
    if (name == "x")
        return 0;
    if (name == "y")
        return 1;
    if (name == "z")
        return 2;
    throw ValidationError(context + ": axis must be 'x', 'y' or 'z', got '" + name + "'");
}

std::pair<fem::MaterialParams, bool> material_from_config(const Config& config) {
    fem::MaterialParams mat = fem::MaterialParams::soft_tissue_default();
    const bool defaulted = !config.has_section("material");
    if (auto v = config.get_double("material", "young_modulus"))
        mat.young_modulus = *v;
    if (auto v = config.get_double("material", "poisson_ratio"))
        mat.poisson_ratio = *v;
    if (auto v = config.get_double("material", "density"))
        mat.density = *v;
    if (auto v = config.get_double("material", "rayleigh_mass"))
        mat.rayleigh_mass = *v;
    if (auto v = config.get_double("material", "rayleigh_stiffness"))
        mat.rayleigh_stiffness = *v;
    mat.validate();
    return {mat, defaulted};
}

tracking::PlaneCalibration calibration_from_config(const Config& config,
                                                   mesh::Plane plane) {
    tracking::PlaneCalibration cal = tracking::PlaneCalibration::for_plane(plane);
    const std::string specific =
        plane == mesh::Plane::midsagittal ? "calibration.midsagittal" : "calibration.coronal";
    for (const std::string& section : {std::string("calibration"), specific}) {
        if (!config.has_section(section))
            continue;
        if (auto v = config.get_double(section, "mm_per_pixel"))
            cal.mm_per_pixel = *v;
        // axes of the generic block belong to the plane it names (default
        // midsagittal); a mismatched plane keeps the conventional axes
        if (section == "calibration") {
            const auto named = config.get_string(section, "plane");
            if (named && plane_from_name(*named, "[calibration] plane") != plane)
                continue;
        }
        if (auto v = config.get_vec3(section, "axis1"))
            cal.axis1 = v->normalized();
        if (auto v = config.get_vec3(section, "axis2"))
            cal.axis2 = v->normalized();
        if (auto v = config.get_vec2(section, "origin_mm"))
            cal.origin_mm = *v;
    }
    cal.validate();
    return cal;
}

fitting::SnakeParams snake_params_from_config(const Config& config) {
    fitting::SnakeParams params;
    if (auto v = config.get_double("fit", "alpha"))
        params.alpha = *v;
    if (auto v = config.get_double("fit", "beta"))
        params.beta = *v;
    if (auto v = config.get_double("fit", "gamma"))
        params.gamma = *v;
    if (auto v = config.get_double("fit", "attraction"))
        params.attraction_weight = *v;
    if (auto v = config.get_int("fit", "max_iterations"))
        params.max_iterations = *v;
    if (auto v = config.get_double("fit", "tolerance_mm"))
        params.convergence_tol = *v;
    if (auto v = config.get_bool("fit", "semi_implicit"))
        params.semi_implicit = *v;
    return params;
}

tracking::TrackParams track_params_from_config(const Config& config) {
    tracking::TrackParams params;
    if (auto v = config.get_int("tracking", "patch_radius"))
        params.patch_radius = *v;
    if (auto v = config.get_int("tracking", "search_radius"))
        params.search_radius = *v;
    if (auto v = config.get_int("tracking", "pyramid_levels"))
        params.pyramid_levels = *v;
    if (auto v = config.get_double("tracking", "min_confidence"))
        params.min_confidence = *v;
    if (auto v = config.get_double("tracking", "refresh_confidence"))
        params.refresh_confidence = *v;
    return params;
}

std::vector<Eigen::Vector2d> seeds_from_config(const Config& config) {
    const auto values = config.get_doubles("tracking", "seeds");
    if (!values || values->empty())
        throw ValidationError("[tracking] seeds is required (pairs of pixel coordinates)");
    if (values->size() % 2 != 0)
        throw ValidationError("[tracking] seeds must hold x y pairs, got " +
                              std::to_string(values->size()) + " numbers");
    std::vector<Eigen::Vector2d> seeds;
    for (std::size_t i = 0; i < values->size(); i += 2)
        seeds.emplace_back((*values)[i], (*values)[i + 1]);
    return seeds;
}

tracking::ImageSequence images_from_config(const Config& config) {
    const auto raw = config.get_string("tracking", "raw");
    const auto images = config.get_string("tracking", "images");
    const double frame_rate = config.get_double("tracking", "frame_rate").value_or(60.0);
    if (raw && images)
        throw ValidationError("[tracking] give either 'raw' or 'images', not both");
    if (raw)
        return tracking::load_raw_sequence(*raw);
    if (!images)
        throw ValidationError("[tracking] needs an image source ('raw' or 'images')");
    const std::string pattern =
        config.get_string("tracking", "pattern").value_or("frame_%04d.pgm");
    const int first = config.get_int("tracking", "first_index").value_or(0);
    return tracking::load_pgm_sequence(*images, pattern, frame_rate, first);
}

bool has_tracking_drive(const Config& config) {
    return config.has_key("tracking", "raw") || config.has_key("tracking", "images");
}

} // namespace

mesh::TetMesh mesh_from_config(const Config& config) {
    const auto node = config.get_string("mesh", "node");
    const auto ele = config.get_string("mesh", "ele");
    const auto bar = config.get_doubles("mesh", "bar");

    ValidationReport report;
    if (bar && (node || ele))
        report.add("[mesh] give either node/ele files or 'bar', not both");
    if (!bar) {
        require_file(report, node, "[mesh] node file");
        require_file(report, ele, "[mesh] ele file");
    } else if (bar->size() != 6) {
        report.add("[mesh] bar needs 6 values: nx ny nz dx dy dz");
    }
    report.throw_if_failed("mesh configuration");

    if (bar)
        return mesh::make_bar_mesh(static_cast<int>((*bar)[0]), static_cast<int>((*bar)[1]),
                                   static_cast<int>((*bar)[2]), (*bar)[3], (*bar)[4],
                                   (*bar)[5]);
    return mesh::load_tet_mesh(*node, *ele);
}

mesh::NodeSelection selection_from_config(const Config& config, const std::string& section,
                                          const mesh::TetMesh& mesh, mesh::NodeRole role) {
    if (!config.has_section(section))
        throw ValidationError("missing [" + section + "] section");

    const auto ids = config.get_ints(section, "ids");
    const auto plane = config.get_string(section, "plane");
    const auto axis = config.get_string(section, "axis");
    const auto coordinate = config.get_double(section, "coordinate");

    const int selectors = (ids ? 1 : 0) + (plane ? 1 : 0) + (axis ? 1 : 0);
    if (selectors != 1)
        throw ValidationError("[" + section + "] needs exactly one of 'ids', 'plane' or "
                              "'axis'");

    mesh::NodeSelection sel;
    if (ids) {
        sel.role = role;
        sel.ids = *ids;
        for (int id : sel.ids)
            if (id < 0 || id >= mesh.node_count())
                throw ValidationError("[" + section + "] node " + std::to_string(id) +
                                      " out of range");
    } else {
        if (!coordinate)
            throw ValidationError("[" + section + "] plane/axis selector needs 'coordinate'");
        const double tolerance = config.get_double(section, "tolerance").value_or(1e-9);
        if (plane)
            sel = mesh::select_plane_nodes(mesh, plane_from_name(*plane, "[" + section + "]"),
                                           *coordinate, tolerance, role);
        else
            sel = mesh::select_axis_nodes(mesh, axis_from_name(*axis, "[" + section + "]"),
                                          *coordinate, tolerance, role);
    }

    if (const auto take = config.get_int(section, "take")) {
        if (*take < 1 || *take > static_cast<int>(sel.ids.size()))
            throw ValidationError("[" + section + "] take = " + std::to_string(*take) +
                                  " out of range for a selection of " +
                                  std::to_string(sel.ids.size()) + " nodes");
        std::vector<int> subset;
        const int m = static_cast<int>(sel.ids.size());
        for (int k = 0; k < *take; ++k) {
            const int idx = (*take == 1) ? (m - 1) / 2
                                         : static_cast<int>(std::lround(
                                               static_cast<double>(k) * (m - 1) / (*take - 1)));
            subset.push_back(sel.ids[idx]);
        }
        sel.ids = std::move(subset);
    }
    return sel;
}

LoadedModel build_model(const Config& config, bool needs_basis, bool needs_constraints) {
    LoadedModel model;
    model.mesh = mesh_from_config(config);

    auto [material, defaulted] = material_from_config(config);
    model.material = material;
    model.material_defaulted = defaulted;

    model.anchors = config.has_section("anchors")
                        ? selection_from_config(config, "anchors", model.mesh,
                                                mesh::NodeRole::anchor)
                        : mesh::NodeSelection{mesh::NodeRole::anchor, {}};
    if (needs_constraints)
        model.constraints = selection_from_config(config, "constraints", model.mesh,
                                                  mesh::NodeRole::constraint);
    mesh::ensure_disjoint(model.anchors, model.constraints);

    model.matrices = fem::assemble(model.mesh, model.material, model.anchors);

    if (needs_basis) {
        const int modes = config.get_int("modal", "modes").value_or(150);
        if (modes < 1)
            throw ValidationError("[modal] modes must be >= 1");
        const auto cache_path = config.get_string("modal", "cache");
        const std::uint64_t hash =
            modal::system_content_hash(model.mesh, model.material, model.anchors);
        if (cache_path) {
            if (auto cached = modal::load_basis_cache(*cache_path, hash, modes)) {
                model.basis = std::move(*cached);
                model.basis_from_cache = true;
            }
        }
        if (!model.basis_from_cache) {
            modal::ModalOptions options;
            if (auto seed = config.get_int("modal", "lanczos_seed"))
                options.lanczos_seed = static_cast<std::uint64_t>(*seed);
            model.basis = modal::compute_modal_basis(model.matrices, modes, options);
            if (cache_path) {
                make_parent_dirs(*cache_path);
                modal::save_basis_cache(*cache_path, hash, model.basis);
            }
        }
    }
    return model;
}

// --- fit ---------------------------------------------------------------------

FitOutcome cmd_fit(const Config& config) {
    config.check_known_keys();

    ValidationReport precheck;
    bool any_plane = false;
    for (const std::string plane_name : {"midsagittal", "coronal"}) {
        const std::string section = "fit." + std::string(plane_name);
        if (!config.has_section(section))
            continue;
        any_plane = true;
        require_file(precheck, config.get_string(section, "contour"),
                     "[" + section + "] contour file");
        if (!config.get_double(section, "coordinate"))
            precheck.add("[" + section + "] needs 'coordinate'");
    }
    if (!any_plane)
        precheck.add("fit needs at least one [fit.midsagittal] or [fit.coronal] section");
    precheck.throw_if_failed("fit configuration");

    LoadedModel model = build_model(config, /*needs_basis=*/false,
                                    /*needs_constraints=*/false);
    const fitting::SnakeParams snake_params = snake_params_from_config(config);

    struct PlaneFit {
        mesh::Plane plane;
        mesh::NodeSelection nodes;
        fitting::SnakeResult snake;
    };
    std::vector<PlaneFit> fits;

    for (const mesh::Plane plane : {mesh::Plane::midsagittal, mesh::Plane::coronal}) {
        const std::string section = plane == mesh::Plane::midsagittal ? "fit.midsagittal"
                                                                      : "fit.coronal";
        if (!config.has_section(section))
            continue;

        const fitting::ContourPolyline contour =
            fitting::load_contour_csv(*config.get_string(section, "contour"));
        if (contour.plane != plane)
            throw ValidationError("[" + section + "] contour file names the other plane");

        const double coordinate = *config.get_double(section, "coordinate");
        const double tolerance = config.get_double(section, "tolerance").value_or(1e-9);
        mesh::NodeSelection nodes = mesh::select_plane_nodes(
            model.mesh, plane, coordinate, tolerance, mesh::NodeRole::constraint);
        // anchored nodes stay at zero; only free section nodes act as control points
        std::erase_if(nodes.ids,
                      [&](int id) { return model.matrices.node_rank[id] < 0; });
        if (nodes.ids.empty())
            throw ValidationError("[" + section + "] selection holds only anchored nodes");

        const tracking::PlaneCalibration cal = calibration_from_config(config, plane);
        std::vector<Eigen::Vector2d> control;
        control.reserve(nodes.ids.size());
        for (int id : nodes.ids)
            control.push_back(cal.project_to_plane_mm(model.mesh.nodes[id]));

        // walk the section perimeter: angular order around the centroid keeps
        // the control polyline free of self-crossings that would corrupt the
        // snake's tension and bending terms
        Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
        for (const auto& p : control)
            centroid += p;
        centroid /= static_cast<double>(control.size());
        std::vector<std::size_t> order(control.size());
        for (std::size_t i = 0; i < order.size(); ++i)
            order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const Eigen::Vector2d da = control[a] - centroid;
            const Eigen::Vector2d db = control[b] - centroid;
            const double aa = std::atan2(da.y(), da.x());
            const double ab = std::atan2(db.y(), db.x());
            if (aa != ab)
                return aa < ab;
            return nodes.ids[a] < nodes.ids[b];
        });
        {
            std::vector<int> ids_sorted;
            std::vector<Eigen::Vector2d> control_sorted;
            ids_sorted.reserve(order.size());
            control_sorted.reserve(order.size());
            for (std::size_t idx : order) {
                ids_sorted.push_back(nodes.ids[idx]);
                control_sorted.push_back(control[idx]);
            }
            nodes.ids = std::move(ids_sorted);
            control = std::move(control_sorted);
        }

        PlaneFit fit{plane, std::move(nodes), fitting::snake_fit(control, contour,
                                                                 snake_params)};
        fits.push_back(std::move(fit));
    }

    // Joint constraint set over all fitted planes. A node selected by two
    // planes must agree on its target.
    fitting::SurfaceTargets targets;
    std::map<int, Eigen::Vector3d> merged;
    for (const auto& fit : fits) {
        const tracking::PlaneCalibration cal = calibration_from_config(config, fit.plane);
        const fitting::SurfaceTargets lifted = fitting::lift_contour_displacements(
            fit.nodes, model.mesh, fit.snake.displacements, cal);
        for (std::size_t i = 0; i < lifted.node_ids.size(); ++i) {
            const int id = lifted.node_ids[i];
            const auto it = merged.find(id);
            if (it == merged.end()) {
                merged.emplace(id, lifted.displacements[i]);
            } else if ((it->second - lifted.displacements[i]).norm() > 1e-9) {
                throw ValidationError("fit: node " + std::to_string(id) +
                                      " receives conflicting targets from the two planes; "
                                      "shrink the selection tolerances");
            }
        }
    }
    for (const auto& [id, disp] : merged) {
        targets.node_ids.push_back(id);
        targets.displacements.push_back(disp);
    }

    FitOutcome outcome;
    outcome.edited = fitting::propagate_edit(model.mesh, model.matrices, targets);
    outcome.planes_fitted = static_cast<int>(fits.size());

    for (int i = 0; i < model.mesh.node_count(); ++i)
        outcome.max_node_move_m = std::max(
            outcome.max_node_move_m,
            (outcome.edited.nodes[i] - model.mesh.nodes[i]).norm());

    double residual_sum = 0.0;
    int residual_count = 0;
    for (const auto& fit : fits)
        for (double r : fit.snake.residuals) {
            residual_sum += r;
            outcome.max_residual_mm = std::max(outcome.max_residual_mm, r);
            ++residual_count;
        }
    outcome.control_points = residual_count;
    outcome.mean_residual_mm = residual_count ? residual_sum / residual_count : 0.0;

    outcome.node_path = config.get_string("fit", "output_node").value_or("fitted.node");
    outcome.ele_path = config.get_string("fit", "output_ele").value_or("fitted.ele");
    mesh::save_tet_mesh(outcome.edited, outcome.node_path, outcome.ele_path);

    if (const auto report_path = config.get_string("fit", "report")) {
        std::ofstream out(*report_path);
        if (!out)
            throw IoError("cannot write fit report: " + *report_path);
        out << "plane,point,node_id,residual_mm,disp_mm_x,disp_mm_y\n";
        char buf[160];
        for (const auto& fit : fits) {
            const char* plane_name =
                fit.plane == mesh::Plane::midsagittal ? "midsagittal" : "coronal";
            for (std::size_t i = 0; i < fit.nodes.ids.size(); ++i) {
                std::snprintf(buf, sizeof(buf), "%s,%zu,%d,%.9g,%.9g,%.9g\n", plane_name, i,
                              fit.nodes.ids[i], fit.snake.residuals[i],
                              fit.snake.displacements[i].x(), fit.snake.displacements[i].y());
                out << buf;
            }
        }
        outcome.report_path = *report_path;
    }
    return outcome;
}

// --- track -------------------------------------------------------------------

TrackOutcome cmd_track(const Config& config) {
    config.check_known_keys();

    ValidationReport precheck;
    if (!has_tracking_drive(config))
        precheck.add("[tracking] needs an image source ('raw' or 'images')");
    if (const auto raw = config.get_string("tracking", "raw"))
        require_file(precheck, raw, "[tracking] raw sequence");
    if (const auto dir = config.get_string("tracking", "images"))
        if (!fs::is_directory(*dir))
            precheck.add("[tracking] images directory does not exist: " + *dir);
    if (!config.has_key("tracking", "seeds"))
        precheck.add("[tracking] seeds is required");
    precheck.throw_if_failed("track configuration");

    const tracking::ImageSequence seq = images_from_config(config);
    const auto seeds = seeds_from_config(config);

    TrackOutcome outcome;
    outcome.tracks = tracking::track_points(seq, seeds, track_params_from_config(config));
    for (int s = 0; s < outcome.tracks.seed_count(); ++s)
        outcome.total_lost_frames += outcome.tracks.lost_frames(s);

    outcome.csv_path = config.get_string("tracking", "output_csv").value_or("tracks.csv");
    make_parent_dirs(outcome.csv_path);
    tracking::save_trajectories_csv(outcome.tracks, outcome.csv_path);
    return outcome;
}

// --- simulate ----------------------------------------------------------------

SimulateOutcome cmd_simulate(const Config& config) {
    config.check_known_keys();

    const auto trajectory_csv = config.get_string("simulate", "trajectory_csv");
    ValidationReport precheck;
    const bool csv_drive = trajectory_csv.has_value();
    const bool image_drive = has_tracking_drive(config);
    if (csv_drive == image_drive)
        precheck.add("simulate needs exactly one drive source: [simulate] trajectory_csv "
                     "or a [tracking] image source");
    if (csv_drive)
        require_file(precheck, trajectory_csv, "[simulate] trajectory_csv");
    if (image_drive) {
        if (const auto raw = config.get_string("tracking", "raw"))
            require_file(precheck, raw, "[tracking] raw sequence");
        if (const auto dir = config.get_string("tracking", "images"))
            if (!fs::is_directory(*dir))
                precheck.add("[tracking] images directory does not exist: " + *dir);
        if (!config.has_key("tracking", "seeds"))
            precheck.add("[tracking] seeds is required");
    }
    const std::string format = config.get_string("simulate", "format").value_or("vtk");
    if (format != "vtk" && format != "obj" && format != "node")
        precheck.add("[simulate] format must be vtk, obj or node, got '" + format + "'");
    const int substeps = config.get_int("simulate", "substeps").value_or(1);
    if (substeps < 1)
        precheck.add("[simulate] substeps must be >= 1");
    precheck.throw_if_failed("simulate configuration");

    LoadedModel model = build_model(config, /*needs_basis=*/true, /*needs_constraints=*/true);

    // Drive signal: external trajectory CSV or built-in tracking.
    tracking::TrackedTrajectorySet tracks;
    double frame_rate = config.get_double("tracking", "frame_rate").value_or(60.0);
    if (csv_drive) {
        tracks = tracking::load_trajectories_csv(*trajectory_csv);
    } else {
        const tracking::ImageSequence seq = images_from_config(config);
        frame_rate = seq.frame_rate;
        tracks = tracking::track_points(seq, seeds_from_config(config),
                                        track_params_from_config(config));
    }

    if (tracks.seed_count() != static_cast<int>(model.constraints.ids.size()))
        throw ValidationError("simulate: " + std::to_string(tracks.seed_count()) +
                              " tracked seeds for " +
                              std::to_string(model.constraints.ids.size()) +
                              " constraint nodes (bound in order)");

    const mesh::Plane cal_plane = plane_from_name(
        config.get_string("calibration", "plane").value_or("midsagittal"),
        "[calibration] plane");
    const tracking::PlaneCalibration cal = calibration_from_config(config, cal_plane);
    const int reference_frame = config.get_int("simulate", "reference_frame").value_or(0);

    const dynamics::ConstraintTimeline timeline = tracking::trajectories_to_timeline(
        tracks, cal, model.constraints.ids, reference_frame, frame_rate);

    dynamics::SimulationOptions options;
    options.substeps = substeps;
    options.warping = config.get_bool("simulate", "warp").value_or(true);
    options.snap_constraints =
        config.get_bool("simulate", "snap_constraints").value_or(false);
    if (auto g = config.get_vec3("simulate", "gravity"))
        options.gravity = *g;

    SimulateOutcome outcome;
    outcome.material_defaulted = model.material_defaulted;
    outcome.sequence = dynamics::simulate(model.mesh, model.matrices, model.basis,
                                          model.material, timeline, options);
    outcome.report = DiagnosticsReport::from_sequence(outcome.sequence);

    outcome.output_dir = config.get_string("simulate", "output_dir").value_or("sim_out");
    make_output_dir(outcome.output_dir);
    char name[64];
    for (std::size_t f = 0; f < outcome.sequence.frames.size(); ++f) {
        const Eigen::VectorXd& disp = outcome.sequence.frames[f];
        if (format == "vtk") {
            std::snprintf(name, sizeof(name), "frame_%06zu.vtk", f);
            write_vtk_unstructured(model.mesh, disp, (fs::path(outcome.output_dir) / name).string());
        } else if (format == "obj") {
            std::snprintf(name, sizeof(name), "frame_%06zu.obj", f);
            write_obj_surface(model.mesh, disp, (fs::path(outcome.output_dir) / name).string());
        } else {
            mesh::TetMesh deformed = model.mesh;
            for (int i = 0; i < deformed.node_count(); ++i)
                deformed.nodes[i] += disp.segment<3>(3 * i);
            std::snprintf(name, sizeof(name), "frame_%06zu", f);
            const std::string base = (fs::path(outcome.output_dir) / name).string();
            mesh::save_tet_mesh(deformed, base + ".node", base + ".ele");
        }
        ++outcome.frames_written;
    }

    outcome.report_path = config.get_string("simulate", "report")
                              .value_or((fs::path(outcome.output_dir) / "report.csv").string());
    make_parent_dirs(outcome.report_path);
    write_report_csv(outcome.sequence, outcome.report_path);
    return outcome;
}

// --- bench -------------------------------------------------------------------

BenchOutcome cmd_bench(const Config& config) {
    config.check_known_keys();

    const int warmup = config.get_int("bench", "warmup").value_or(30);
    const int steps = config.get_int("bench", "steps").value_or(300);
    if (warmup < 0 || steps < 1)
        throw ValidationError("[bench] warmup must be >= 0 and steps >= 1");

    LoadedModel model = build_model(config, /*needs_basis=*/true, /*needs_constraints=*/true);

    double z_min = model.mesh.nodes[0].z(), z_max = z_min;
    for (const auto& p : model.mesh.nodes) {
        z_min = std::min(z_min, p.z());
        z_max = std::max(z_max, p.z());
    }
    const double amplitude =
        config.get_double("bench", "amplitude").value_or(0.01 * (z_max - z_min));
    const double frequency = config.get_double("bench", "frequency").value_or(2.0);

    const double dt = 1.0 / 60.0;
    dynamics::NewmarkIntegrator integrator(model.basis, model.matrices, model.material, dt,
                                           model.constraints.ids);
    const dynamics::WarpOperator warp =
        dynamics::build_warp_operator(model.mesh, model.matrices);
    const dynamics::WarpedReconstructor reconstructor(model.basis, warp);

    dynamics::ReducedState state = dynamics::ReducedState::rest(model.basis.mode_count());
    const int n_constrained = static_cast<int>(model.constraints.ids.size());
    std::vector<Eigen::Vector3d> targets(n_constrained);
    Eigen::VectorXd u_linear, u_warped;
    const Eigen::VectorXd no_force;

    using clock = std::chrono::steady_clock;
    double solve_ns = 0.0, reconstruct_ns = 0.0;

    constexpr double kTwoPi = 6.283185307179586;
    for (int step = 0; step < warmup + steps; ++step) {
        const double t = (step + 1) * dt;
        const double height = amplitude * std::sin(kTwoPi * frequency * t);
        for (auto& target : targets)
            target = Eigen::Vector3d(0, 0, height);

        const auto t0 = clock::now();
        integrator.step(state, no_force, n_constrained > 0 ? &targets : nullptr);
        const auto t1 = clock::now();
        reconstructor.reconstruct(state.q, u_linear, u_warped);
        const auto t2 = clock::now();

        if (step >= warmup) {
            solve_ns += std::chrono::duration<double, std::nano>(t1 - t0).count();
            reconstruct_ns += std::chrono::duration<double, std::nano>(t2 - t1).count();
        }
    }
    if (!state.q.allFinite())
        throw NumericalError("bench: state diverged");

    BenchOutcome outcome;
    outcome.nodes = model.mesh.node_count();
    outcome.free_dofs = model.matrices.free_dof_count();
    outcome.modes = model.basis.mode_count();
    outcome.timed_steps = steps;
    outcome.reduced_solve_ms_per_step = solve_ns / steps / 1e6;
    outcome.reconstruct_ms_per_step = reconstruct_ns / steps / 1e6;
    outcome.steps_per_second = 1e9 * steps / (solve_ns + reconstruct_ns);

    if (const auto report_path = config.get_string("bench", "report")) {
        make_parent_dirs(*report_path);
        std::ofstream out(*report_path);
        if (!out)
            throw IoError("cannot write bench report: " + *report_path);
        out << "nodes,free_dofs,modes,steps,steps_per_s,reduced_solve_ms,reconstruct_ms\n"
            << outcome.nodes << ',' << outcome.free_dofs << ',' << outcome.modes << ','
            << outcome.timed_steps << ',' << outcome.steps_per_second << ','
            << outcome.reduced_solve_ms_per_step << ',' << outcome.reconstruct_ms_per_step
            << '\n';
    }
    return outcome;
}

} // namespace modalsim::pipeline
