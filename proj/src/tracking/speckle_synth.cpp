#include "modalsim/tracking/speckle_synth.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "modalsim/error.hpp"

namespace modalsim::tracking {

SyntheticMotion SyntheticMotion::none() {
    auto id = [](const Eigen::Vector2d& p, int) { return p; };
    return {id, id};
}

SyntheticMotion SyntheticMotion::translation(const Eigen::Vector2d& per_frame) {
    return {
        [per_frame](const Eigen::Vector2d& p, int k) -> Eigen::Vector2d {
            return p + static_cast<double>(k) * per_frame;
        },
        [per_frame](const Eigen::Vector2d& p, int k) -> Eigen::Vector2d {
            return p - static_cast<double>(k) * per_frame;
        },
    };
}

SyntheticMotion SyntheticMotion::rotation_about(const Eigen::Vector2d& center,
                                                double radians_per_frame) {
    auto rotate = [center](const Eigen::Vector2d& p, double angle) -> Eigen::Vector2d {
        const double c = std::cos(angle), s = std::sin(angle);
        const Eigen::Vector2d d = p - center;
        return center + Eigen::Vector2d(c * d.x() - s * d.y(), s * d.x() + c * d.y());
    };
    return {
        [rotate, radians_per_frame](const Eigen::Vector2d& p, int k) {
            return rotate(p, radians_per_frame * k);
        },
        [rotate, radians_per_frame](const Eigen::Vector2d& p, int k) {
            return rotate(p, -radians_per_frame * k);
        },
    };
}

SyntheticMotion SyntheticMotion::affine(const Eigen::Matrix2d& a, const Eigen::Vector2d& b) {
    return {
        [a, b](const Eigen::Vector2d& p, int k) -> Eigen::Vector2d {
            Eigen::Vector2d q = p;
            for (int i = 0; i < k; ++i)
                q = a * q + b;
            return q;
        },
        [a, b](const Eigen::Vector2d& p, int k) -> Eigen::Vector2d {
            const Eigen::Matrix2d ainv = a.inverse();
            Eigen::Vector2d q = p;
            for (int i = 0; i < k; ++i)
                q = ainv * (q - b);
            return q;
        },
    };
}

SyntheticMotion SyntheticMotion::displacement_field(
    std::function<Eigen::Vector2d(const Eigen::Vector2d&, int)> field) {
    SyntheticMotion motion;
    motion.forward = [field](const Eigen::Vector2d& p, int k) -> Eigen::Vector2d {
        return p + field(p, k);
    };
    motion.inverse = nullptr; // generator falls back to fixed-point inversion
    return motion;
}

namespace {

double bilinear(const std::vector<float>& img, int width, int height, double x, double y) {
    x = std::clamp(x, 0.0, width - 1.0);
    y = std::clamp(y, 0.0, height - 1.0);
    const int x0 = std::min(static_cast<int>(x), width - 2 >= 0 ? width - 2 : 0);
    const int y0 = std::min(static_cast<int>(y), height - 2 >= 0 ? height - 2 : 0);
    const double fx = x - x0;
    const double fy = y - y0;
    const auto at = [&](int xx, int yy) {
        return static_cast<double>(img[static_cast<std::size_t>(yy) * width + xx]);
    };
    const int x1 = std::min(x0 + 1, width - 1);
    const int y1 = std::min(y0 + 1, height - 1);
    return (1 - fx) * (1 - fy) * at(x0, y0) + fx * (1 - fy) * at(x1, y0) +
           (1 - fx) * fy * at(x0, y1) + fx * fy * at(x1, y1);
}

} // namespace

ImageSequence synth_speckle_sequence(int width, int height, int n_frames,
                                     const SyntheticMotion& motion,
                                     double speckle_density, double noise_sigma,
                                     std::uint64_t rng_seed, double frame_rate) {
    if (width < 32 || height < 32)
        throw ValidationError("synth_speckle_sequence: dimensions must be >= 32");
    if (n_frames < 1)
        throw ValidationError("synth_speckle_sequence: n_frames must be >= 1");
    if (!(speckle_density > 0))
        throw ValidationError("synth_speckle_sequence: speckle_density must be > 0");
    if (noise_sigma < 0)
        throw ValidationError("synth_speckle_sequence: noise_sigma must be >= 0");
    if (!motion.forward)
        throw ValidationError("synth_speckle_sequence: motion.forward is required");

    std::mt19937_64 rng(rng_seed);

    // Base field: sum of Gaussian blobs on a dim background.
    std::vector<float> base(static_cast<std::size_t>(width) * height, 18.0f);
    const int n_blobs = std::max(1, static_cast<int>(speckle_density * width * height));
    std::uniform_real_distribution<double> ux(0.0, width - 1.0);
    std::uniform_real_distribution<double> uy(0.0, height - 1.0);
    std::uniform_real_distribution<double> usigma(0.8, 1.8);
    std::uniform_real_distribution<double> uamp(60.0, 200.0);

    for (int blob = 0; blob < n_blobs; ++blob) {
        const double cx = ux(rng);
        const double cy = uy(rng);
        const double sigma = usigma(rng);
        const double amp = uamp(rng);
        const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
        const int radius = static_cast<int>(std::ceil(3.0 * sigma));
        const int x0 = std::max(0, static_cast<int>(cx) - radius);
        const int x1 = std::min(width - 1, static_cast<int>(cx) + radius + 1);
        const int y0 = std::max(0, static_cast<int>(cy) - radius);
        const int y1 = std::min(height - 1, static_cast<int>(cy) + radius + 1);
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                base[static_cast<std::size_t>(y) * width + x] +=
                    static_cast<float>(amp * std::exp(-d2 * inv2s2));
            }
    }
    for (auto& v : base)
        v = std::min(v, 255.0f);

    auto invert = [&](const Eigen::Vector2d& p, int k) -> Eigen::Vector2d {
        if (motion.inverse)
            return motion.inverse(p, k);
        // fixed-point inversion of x + d(x) = p for smooth fields
        Eigen::Vector2d q = p;
        for (int it = 0; it < 12; ++it)
            q = p - (motion.forward(q, k) - q);
        return q;
    };

    std::normal_distribution<double> noise(0.0, noise_sigma);

    ImageSequence seq;
    seq.width = width;
    seq.height = height;
    seq.frame_rate = frame_rate;
    seq.frames.resize(n_frames);
    for (int k = 0; k < n_frames; ++k) {
        auto& frame = seq.frames[k];
        frame.resize(base.size());
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                double value;
                if (k == 0) {
                    value = base[static_cast<std::size_t>(y) * width + x];
                } else {
                    const Eigen::Vector2d src =
                        invert(Eigen::Vector2d(x, y), k);
                    value = bilinear(base, width, height, src.x(), src.y());
                    if (noise_sigma > 0)
                        value += noise(rng);
                }
                frame[static_cast<std::size_t>(y) * width + x] =
                    static_cast<std::uint8_t>(std::clamp(value, 0.0, 255.0) + 0.5);
            }
    }
    return seq;
}

} // namespace modalsim::tracking
