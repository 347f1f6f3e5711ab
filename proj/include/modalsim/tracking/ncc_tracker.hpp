#pragma once

#include <vector>

#include <Eigen/Core>

#include "modalsim/tracking/image_sequence.hpp"

namespace modalsim::tracking {

struct TrackParams {
    int patch_radius = 8;        // template half-width, px
    int search_radius = 12;      // frame-to-frame search half-width, px
    int pyramid_levels = 2;      // 1 = full resolution only
    double min_confidence = 0.4; // below this the seed is marked lost
    // Template refresh threshold: the template is sampled in a reference
    // frame and re-anchored to the current frame whenever the best score
    // falls below this, which bounds drift under slow appearance change.
    double refresh_confidence = 0.75;
};

struct TrackedTrajectorySet {
    std::vector<Eigen::Vector2d> seeds;
    std::vector<std::vector<Eigen::Vector2d>> trajectories; // per seed, per frame
    std::vector<std::vector<double>> confidences;           // NCC scores in [-1, 1]
    std::vector<std::vector<std::uint8_t>> lost;            // per seed, per frame

    int seed_count() const { return static_cast<int>(seeds.size()); }
    int frame_count() const {
        return trajectories.empty() ? 0 : static_cast<int>(trajectories[0].size());
    }
    int lost_frames(int seed) const;
};

// Normalized cross-correlation patch tracking on an image pyramid. Integer
// matches are refined to subpixel by a quadratic fit of the 3x3 score
// neighborhood. A seed whose best score drops below min_confidence holds its
// last position for that frame and is flagged lost.
TrackedTrajectorySet track_points(const ImageSequence& seq,
                                  const std::vector<Eigen::Vector2d>& seeds,
                                  const TrackParams& params);

} // namespace modalsim::tracking
