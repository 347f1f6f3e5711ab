#pragma once

#include <string>
#include <vector>

#include "modalsim/dynamics/newmark.hpp"
#include "modalsim/tracking/calibration.hpp"
#include "modalsim/tracking/ncc_tracker.hpp"

namespace modalsim::tracking {

// Wire format "frame,seed_id,x_px,y_px,confidence", one row per seed per
// frame; also the ingestion format when tracking is done by external tools.
void save_trajectories_csv(const TrackedTrajectorySet& tracks, const std::string& path);
TrackedTrajectorySet load_trajectories_csv(const std::string& path);

// Pixel trajectories to per-frame 3D displacement targets: displacement
// relative to the reference frame, scaled mm-per-pixel, embedded through the
// plane axes (out-of-plane component zero), converted to meters.
// node_binding[i] is the mesh node driven by seed i.
dynamics::ConstraintTimeline trajectories_to_timeline(const TrackedTrajectorySet& tracks,
                                                      const PlaneCalibration& calibration,
                                                      const std::vector<int>& node_binding,
                                                      int reference_frame,
                                                      double frame_rate);

} // namespace modalsim::tracking
