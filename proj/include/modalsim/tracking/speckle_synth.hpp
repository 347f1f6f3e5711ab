#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Core>

#include "modalsim/tracking/image_sequence.hpp"

namespace modalsim::tracking {

// Cumulative motion of the synthetic scene: forward maps a base-frame
// position to its location in frame k (frame 0 is the identity). inverse is
// the exact inverse map when available; when absent the generator inverts
// forward by fixed-point iteration, which is adequate for smooth fields.
struct SyntheticMotion {
    std::function<Eigen::Vector2d(const Eigen::Vector2d&, int)> forward;
    std::function<Eigen::Vector2d(const Eigen::Vector2d&, int)> inverse;

    static SyntheticMotion none();
    static SyntheticMotion translation(const Eigen::Vector2d& per_frame);
    static SyntheticMotion rotation_about(const Eigen::Vector2d& center,
                                          double radians_per_frame);
    // Per-frame incremental affine x -> A x + b, composed cumulatively.
    static SyntheticMotion affine(const Eigen::Matrix2d& a, const Eigen::Vector2d& b);
    // Smooth displacement field d(x, k) added to the base position.
    static SyntheticMotion displacement_field(
        std::function<Eigen::Vector2d(const Eigen::Vector2d&, int)> field);
};

// Gaussian-blob speckle field warped frame by frame with bilinear sampling
// plus additive Gaussian noise. Deterministic for a fixed seed.
ImageSequence synth_speckle_sequence(int width, int height, int n_frames,
                                     const SyntheticMotion& motion,
                                     double speckle_density, double noise_sigma,
                                     std::uint64_t rng_seed, double frame_rate = 60.0);

} // namespace modalsim::tracking
