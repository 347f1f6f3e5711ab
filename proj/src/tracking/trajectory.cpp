#include "modalsim/tracking/trajectory.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "modalsim/error.hpp"

namespace modalsim::tracking {

void save_trajectories_csv(const TrackedTrajectorySet& tracks, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write trajectory file: " + path);
    out << "frame,seed_id,x_px,y_px,confidence\n";
    char buf[160];
    for (int frame = 0; frame < tracks.frame_count(); ++frame)
        for (int s = 0; s < tracks.seed_count(); ++s) {
            const auto& p = tracks.trajectories[s][frame];
            std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g,%.17g\n", frame, s,
                          p.x(), p.y(), tracks.confidences[s][frame]);
            out << buf;
        }
    if (!out)
        throw IoError("write failed: " + path);
}

TrackedTrajectorySet load_trajectories_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open trajectory file: " + path);

    struct Row {
        int frame, seed;
        double x, y, confidence;
    };
    std::vector<Row> rows;
    int max_frame = -1, max_seed = -1;

    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty() || line[0] == '#')
            continue;
        if (line_number == 1 && line.rfind("frame", 0) == 0)
            continue; // header
        Row row;
        if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%lf", &row.frame, &row.seed, &row.x,
                        &row.y, &row.confidence) != 5)
            throw ValidationError(path + ":" + std::to_string(line_number) +
                                  ": expected 'frame,seed_id,x_px,y_px,confidence'");
        if (row.frame < 0 || row.seed < 0)
            throw ValidationError(path + ":" + std::to_string(line_number) +
                                  ": negative frame or seed id");
        max_frame = std::max(max_frame, row.frame);
        max_seed = std::max(max_seed, row.seed);
        rows.push_back(row);
    }
    if (rows.empty())
        throw ValidationError(path + ": no trajectory rows");

    const int n_frames = max_frame + 1;
    const int n_seeds = max_seed + 1;
    TrackedTrajectorySet tracks;
    tracks.seeds.resize(n_seeds);
    tracks.trajectories.assign(n_seeds, std::vector<Eigen::Vector2d>(n_frames));
    tracks.confidences.assign(n_seeds, std::vector<double>(n_frames, 0.0));
    tracks.lost.assign(n_seeds, std::vector<std::uint8_t>(n_frames, 1));

    for (const auto& row : rows) {
        tracks.trajectories[row.seed][row.frame] = {row.x, row.y};
        tracks.confidences[row.seed][row.frame] = row.confidence;
        tracks.lost[row.seed][row.frame] = 0;
    }
    for (int s = 0; s < n_seeds; ++s) {
        for (int f = 0; f < n_frames; ++f)
            if (tracks.lost[s][f])
                throw ValidationError(path + ": missing row for seed " + std::to_string(s) +
                                      " frame " + std::to_string(f));
        tracks.seeds[s] = tracks.trajectories[s][0];
    }
    return tracks;
}

dynamics::ConstraintTimeline trajectories_to_timeline(const TrackedTrajectorySet& tracks,
                                                      const PlaneCalibration& calibration,
                                                      const std::vector<int>& node_binding,
                                                      int reference_frame,
                                                      double frame_rate) {
    calibration.validate();
    const int n_seeds = tracks.seed_count();
    const int n_frames = tracks.frame_count();
    if (n_seeds == 0 || n_frames == 0)
        throw ValidationError("trajectories_to_timeline: empty trajectory set");
    if (static_cast<int>(node_binding.size()) != n_seeds)
        throw ValidationError("trajectories_to_timeline: binding maps " +
                              std::to_string(node_binding.size()) + " nodes for " +
                              std::to_string(n_seeds) + " seeds");
    if (reference_frame < 0 || reference_frame >= n_frames)
        throw ValidationError("trajectories_to_timeline: reference_frame " +
                              std::to_string(reference_frame) + " out of range");
    std::unordered_set<int> seen;
    for (int node : node_binding)
        if (!seen.insert(node).second)
            throw ValidationError("trajectories_to_timeline: node " + std::to_string(node) +
                                  " bound to more than one seed");

    dynamics::ConstraintTimeline timeline;
    timeline.node_ids = node_binding;
    timeline.frame_rate = frame_rate;
    timeline.frames.assign(n_frames, std::vector<Eigen::Vector3d>(n_seeds));
    for (int f = 0; f < n_frames; ++f)
        for (int s = 0; s < n_seeds; ++s) {
            const Eigen::Vector2d disp_px =
                tracks.trajectories[s][f] - tracks.trajectories[s][reference_frame];
            timeline.frames[f][s] = calibration.lift_mm(disp_px * calibration.mm_per_pixel);
        }
    return timeline;
}

} // namespace modalsim::tracking
