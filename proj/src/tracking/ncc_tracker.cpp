#include "modalsim/tracking/ncc_tracker.hpp"

#include <cmath>

#include "modalsim/error.hpp"
#include "modalsim/simd/kernels.hpp"

namespace modalsim::tracking {

int TrackedTrajectorySet::lost_frames(int seed) const {
    int count = 0;
    for (std::uint8_t flag : lost[seed])
        count += flag ? 1 : 0;
    return count;
}

namespace {

struct PyramidLevel {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    float at(int x, int y) const {
        return data[static_cast<std::size_t>(y) * width + x];
    }
};

std::vector<PyramidLevel> build_pyramid(const std::vector<std::uint8_t>& frame,
                                        int width, int height, int levels) {
    std::vector<PyramidLevel> pyramid(levels);
    pyramid[0].width = width;
    pyramid[0].height = height;
    pyramid[0].data.resize(frame.size());
    for (std::size_t i = 0; i < frame.size(); ++i)
        pyramid[0].data[i] = static_cast<float>(frame[i]);

    for (int l = 1; l < levels; ++l) {
        const PyramidLevel& src = pyramid[l - 1];
        PyramidLevel& dst = pyramid[l];
        dst.width = std::max(1, src.width / 2);
        dst.height = std::max(1, src.height / 2);
        dst.data.resize(static_cast<std::size_t>(dst.width) * dst.height);
        for (int y = 0; y < dst.height; ++y)
            for (int x = 0; x < dst.width; ++x) {
                const int sx = std::min(2 * x + 1, src.width - 1);
                const int sy = std::min(2 * y + 1, src.height - 1);
                dst.data[static_cast<std::size_t>(y) * dst.width + x] =
                    0.25f * (src.at(2 * x, 2 * y) + src.at(sx, 2 * y) +
                             src.at(2 * x, sy) + src.at(sx, sy));
            }
    }
    return pyramid;
}

float bilinear(const PyramidLevel& img, double x, double y) {
    x = std::clamp(x, 0.0, img.width - 1.0);
    y = std::clamp(y, 0.0, img.height - 1.0);
    const int x0 = std::min(static_cast<int>(x), std::max(img.width - 2, 0));
    const int y0 = std::min(static_cast<int>(y), std::max(img.height - 2, 0));
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    return static_cast<float>((1 - fx) * (1 - fy) * img.at(x0, y0) +
                              fx * (1 - fy) * img.at(x1, y0) +
                              (1 - fx) * fy * img.at(x0, y1) +
                              fx * fy * img.at(x1, y1));
}

// Template patch of one seed at one pyramid level, sampled around a subpixel
// anchor so the anchor's fractional part is carried by the template itself.
struct Template {
    int radius = 0;
    std::vector<float> pixels; // (2r+1)^2

    void sample(const PyramidLevel& img, const Eigen::Vector2d& center) {
        const int w = 2 * radius + 1;
        pixels.resize(static_cast<std::size_t>(w) * w);
        std::size_t idx = 0;
        for (int dy = -radius; dy <= radius; ++dy)
            for (int dx = -radius; dx <= radius; ++dx)
                pixels[idx++] = bilinear(img, center.x() + dx, center.y() + dy);
    }
};

double ncc_score(const Template& tmpl, const PyramidLevel& img, int cx, int cy) {
    const int r = tmpl.radius;
    const int w = 2 * r + 1;
    if (cx - r < 0 || cy - r < 0 || cx + r >= img.width || cy + r >= img.height)
        return -2.0; // out of bounds, worse than any valid score
    const float* window = img.data.data() +
                          static_cast<std::size_t>(cy - r) * img.width + (cx - r);
    double sums[5];
    simd::active_kernels().window_stats(tmpl.pixels.data(), static_cast<std::size_t>(w),
                                        window, static_cast<std::size_t>(img.width),
                                        static_cast<std::size_t>(w),
                                        static_cast<std::size_t>(w), sums);
    const double n = static_cast<double>(w) * w;
    const double var_a = sums[2] - sums[0] * sums[0] / n;
    const double var_b = sums[3] - sums[1] * sums[1] / n;
    const double cov = sums[4] - sums[0] * sums[1] / n;
    const double denom = std::sqrt(std::max(var_a, 0.0) * std::max(var_b, 0.0));
    if (denom < 1e-12)
        return 0.0;
    return std::clamp(cov / denom, -1.0, 1.0);
}

// Vertex of the parabola through (-1, sm), (0, s0), (1, sp); zero when the
// samples do not bracket a maximum.
double parabolic_offset(double sm, double s0, double sp) {
    const double denom = sm - 2.0 * s0 + sp;
    if (denom >= -1e-12)
        return 0.0;
    const double delta = 0.5 * (sm - sp) / denom;
    return std::clamp(delta, -0.6, 0.6);
}

struct SeedTracker {
    Eigen::Vector2d position;
    std::vector<Template> templates; // one per pyramid level
    bool lost = false;

    void anchor(const std::vector<PyramidLevel>& pyramid, const TrackParams& params) {
        templates.resize(pyramid.size());
        for (std::size_t l = 0; l < pyramid.size(); ++l) {
            const double scale = static_cast<double>(1 << l);
            templates[l].radius = std::max(2, params.patch_radius >> l);
            templates[l].sample(pyramid[l], position / scale);
        }
    }
};

} // namespace

TrackedTrajectorySet track_points(const ImageSequence& seq,
                                  const std::vector<Eigen::Vector2d>& seeds,
                                  const TrackParams& params) {
    seq.validate();
    if (seeds.empty())
        throw ValidationError("track_points: no seeds");
    if (params.patch_radius < 2)
        throw ValidationError("track_points: patch_radius must be >= 2");
    if (params.search_radius < 1)
        throw ValidationError("track_points: search_radius must be >= 1");
    if (params.pyramid_levels < 1)
        throw ValidationError("track_points: pyramid_levels must be >= 1");

    const int margin = params.patch_radius + 1;
    for (std::size_t s = 0; s < seeds.size(); ++s) {
        const auto& seed = seeds[s];
        if (!(seed.x() >= margin && seed.x() < seq.width - margin &&
              seed.y() >= margin && seed.y() < seq.height - margin))
            throw ValidationError("track_points: seed " + std::to_string(s) +
                                  " at (" + std::to_string(seed.x()) + ", " +
                                  std::to_string(seed.y()) +
                                  ") is outside the valid margin of " +
                                  std::to_string(margin) + " px");
    }

    // Levels that would shrink below the template are dropped.
    int levels = params.pyramid_levels;
    while (levels > 1 &&
           (std::min(seq.width, seq.height) >> (levels - 1)) < 4 * params.patch_radius)
        --levels;

    const int n_seeds = static_cast<int>(seeds.size());
    const int n_frames = seq.frame_count();

    TrackedTrajectorySet out;
    out.seeds = seeds;
    out.trajectories.assign(n_seeds, std::vector<Eigen::Vector2d>(n_frames));
    out.confidences.assign(n_seeds, std::vector<double>(n_frames, 1.0));
    out.lost.assign(n_seeds, std::vector<std::uint8_t>(n_frames, 0));

    std::vector<SeedTracker> trackers(n_seeds);
    {
        const auto pyramid = build_pyramid(seq.frames[0], seq.width, seq.height, levels);
        for (int s = 0; s < n_seeds; ++s) {
            trackers[s].position = seeds[s];
            trackers[s].anchor(pyramid, params);
            out.trajectories[s][0] = seeds[s];
        }
    }

    for (int frame = 1; frame < n_frames; ++frame) {
        const auto pyramid = build_pyramid(seq.frames[frame], seq.width, seq.height, levels);

        for (int s = 0; s < n_seeds; ++s) {
            SeedTracker& tracker = trackers[s];
            Eigen::Vector2d estimate = tracker.position;
            double best_score = -2.0;
            Eigen::Vector2d matched = tracker.position;
            bool valid = false;

            for (int level = levels - 1; level >= 0; --level) {
                const double scale = static_cast<double>(1 << level);
                const PyramidLevel& img = pyramid[level];
                const Template& tmpl = tracker.templates[level];

                const int sr = (level == levels - 1)
                                   ? std::max(1, static_cast<int>(std::ceil(
                                                     params.search_radius / scale)))
                                   : 3;
                const int cx0 = static_cast<int>(std::lround(estimate.x() / scale));
                const int cy0 = static_cast<int>(std::lround(estimate.y() / scale));

                const int grid = 2 * sr + 1;
                std::vector<double> scores(static_cast<std::size_t>(grid) * grid, -2.0);
                double level_best = -2.0;
                int bx = 0, by = 0;
                for (int dy = -sr; dy <= sr; ++dy)
                    for (int dx = -sr; dx <= sr; ++dx) {
                        const double score =
                            ncc_score(tmpl, img, cx0 + dx, cy0 + dy);
                        scores[static_cast<std::size_t>(dy + sr) * grid + (dx + sr)] = score;
                        if (score > level_best) {
                            level_best = score;
                            bx = dx;
                            by = dy;
                        }
                    }

                if (level_best <= -2.0)
                    break; // entire window out of bounds

                Eigen::Vector2d level_pos(cx0 + bx, cy0 + by);
                if (level == 0) {
                    // quadratic subpixel refinement on the 3x3 neighborhood;
                    // a perfect score is already the global optimum of NCC,
                    // so refinement can only add bias there
                    if (level_best < 1.0 - 1e-12 &&
                        bx > -sr && bx < sr && by > -sr && by < sr) {
                        auto sc = [&](int dx, int dy) {
                            return scores[static_cast<std::size_t>(dy + sr) * grid +
                                          (dx + sr)];
                        };
                        const double ox = parabolic_offset(sc(bx - 1, by), sc(bx, by),
                                                           sc(bx + 1, by));
                        const double oy = parabolic_offset(sc(bx, by - 1), sc(bx, by),
                                                           sc(bx, by + 1));
                        level_pos += Eigen::Vector2d(ox, oy);
                    }
                    best_score = level_best;
                    matched = level_pos;
                    valid = true;
                } else {
                    estimate = scale * level_pos;
                }
            }

            if (!valid || best_score < params.min_confidence) {
                // hold the last position; keep the template so the seed can
                // be picked up again
                out.trajectories[s][frame] = tracker.position;
                out.confidences[s][frame] = valid ? best_score : -1.0;
                out.lost[s][frame] = 1;
                continue;
            }

            tracker.position = matched;
            out.trajectories[s][frame] = matched;
            out.confidences[s][frame] = best_score;

            if (best_score < params.refresh_confidence)
                tracker.anchor(pyramid, params);
        }
    }
    return out;
}

} // namespace modalsim::tracking
