#pragma once

// Procedural stand-in for the KTH recordings: a dark articulated figure on a
// textured static background, one gait or gesture per action class.
//
// Locomotion classes differ by gait frequency, stride amplitude, lean and
// arm bend, with subject-level variation that makes neighbouring classes
// overlap; the gait phase is random per sequence. The figure crosses the
// scene and is off-screen in the first frame. In-place classes stand still
// and take their background from the running sequence of the same subject
// and scenario.

#include "dataset.hpp"
#include "image.hpp"
#include "preprocess.hpp"
#include "random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

namespace toirc {

struct SyntheticOptions {
    std::uint64_t seed = 7;
    int subjects = kSubjects;
    int repetitions = kRepetitions;
    std::vector<Scenario> scenarios{Scenario::s1};
    /// Per-pixel camera noise standard deviation.
    double noise = 0.03;
};

/// Per-sequence figure and motion parameters.
struct FigureMotion {
    double height = 70.0;
    /// Frames are rendered at x(t) = start_x + direction * speed * t.
    double start_x = 0.0;
    double speed = 0.0;
    int direction = 1;
    double ground = 104.0;
    double frequency = 0.04;
    double phase = 0.0;
    double leg_amplitude = 0.4;
    double arm_amplitude = 0.3;
    double lean = 0.0;
    double elbow = 0.3;
    double knee = 0.5;
    /// Figure intensity and thickness multiplier.
    double tone = 0.2;
    double bulk = 1.0;
    /// Linear zoom across the sequence (scenario with scale variation).
    double zoom_rate = 0.0;
    int length = 100;
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Uniform in [lo, hi) from the next draw.
inline double draw(CounterRng& rng, double lo, double hi) { return lo + (hi - lo) * rng.next_unit(); }

inline std::uint64_t key_hash(const RecordKey& k, std::uint64_t seed)
{
    return mix64(seed ^ mix64(std::uint64_t(k.subject) * 1000003ull + std::uint64_t(k.action) * 1009ull +
                              std::uint64_t(k.scenario) * 101ull + std::uint64_t(k.repetition)));
}

/// Subject traits shared by all sequences of one subject: a multiplier in
/// [0.85, 1.15] on each motion parameter.
struct SubjectTraits {
    double scale, pace, stride, posture, tone;
};

inline SubjectTraits subject_traits(int subject, std::uint64_t seed)
{
    CounterRng rng(mix64(seed ^ std::uint64_t(subject) * 0x51ED27ull), streams::synthetic);
    SubjectTraits t{};
    t.scale = draw(rng, 0.88, 1.06);
    t.pace = draw(rng, 0.85, 1.15);
    t.stride = draw(rng, 0.85, 1.15);
    t.posture = draw(rng, 0.8, 1.2);
    t.tone = draw(rng, 0.1, 0.3);
    return t;
}

} // namespace detail

inline FigureMotion figure_motion(const RecordKey& k, std::uint64_t seed)
{
    const auto traits = detail::subject_traits(k.subject, seed);
    CounterRng rng(detail::key_hash(k, seed), streams::synthetic);
    using detail::draw;
    FigureMotion m;
    m.height = 68.0 * traits.scale * draw(rng, 0.97, 1.03);
    m.tone = traits.tone;
    m.phase = draw(rng, 0.0, 2.0 * std::numbers::pi);
    m.direction = rng.next_unit() < 0.5 ? 1 : -1;
    m.ground = draw(rng, 100.0, 108.0);
    if (k.scenario == Scenario::s2) {
        m.zoom_rate = draw(rng, -0.003, 0.003);
    }
    if (k.scenario == Scenario::s3) {
        m.bulk = 1.35;
        m.tone = std::min(traits.tone + 0.1, 0.38);
    }
    const double pace = traits.pace * draw(rng, 0.94, 1.06);
    const double stride = traits.stride * draw(rng, 0.94, 1.06);
    switch (k.action) {
    case Action::walking:
        m.frequency = 0.042 * pace;
        m.leg_amplitude = 0.42 * stride;
        m.arm_amplitude = 0.35 * stride;
        m.lean = 0.04 * traits.posture;
        m.elbow = 0.25;
        m.knee = 0.45;
        m.speed = 1.0 * traits.scale * pace * stride;
        m.length = int(draw(rng, 90, 131));
        break;
    case Action::jogging:
        m.frequency = 0.058 * pace;
        m.leg_amplitude = 0.52 * stride;
        m.arm_amplitude = 0.45 * stride;
        m.lean = 0.10 * traits.posture;
        m.elbow = 1.15;
        m.knee = 0.9;
        m.speed = 2.0 * traits.scale * pace * stride;
        m.length = int(draw(rng, 60, 91));
        break;
    case Action::running:
        m.frequency = 0.076 * pace;
        m.leg_amplitude = 0.62 * stride;
        m.arm_amplitude = 0.55 * stride;
        m.lean = 0.17 * traits.posture;
        m.elbow = 1.45;
        m.knee = 1.2;
        m.speed = 3.4 * traits.scale * pace * stride;
        m.length = int(draw(rng, 40, 61));
        break;
    case Action::boxing:
        m.frequency = 0.05 * pace;
        m.arm_amplitude = 1.0 * stride;
        m.length = int(draw(rng, 70, 111));
        break;
    case Action::handclapping:
        m.frequency = 0.08 * pace;
        m.arm_amplitude = 1.0 * stride;
        m.length = int(draw(rng, 70, 111));
        break;
    case Action::handwaving:
        m.frequency = 0.05 * pace;
        m.arm_amplitude = 0.45 * stride;
        m.length = int(draw(rng, 100, 151));
        break;
    }
    if (is_in_place(k.action)) {
        m.start_x = draw(rng, 55.0, 105.0);
    } else {
        // Off-screen at t = 0, entering from the side it faces away from.
        const double margin = 0.45 * m.height;
        m.start_x = m.direction > 0 ? -margin : double(kFrameWidth) + margin;
    }
    return m;
}

namespace detail {

struct Capsule {
    double ax, ay, bx, by, radius;
};

/// Pose of the figure at frame t as capsules plus the head.
inline std::vector<Capsule> figure_pose(const RecordKey& k, const FigureMotion& m, int t)
{
    const double h = m.height * (1.0 + m.zoom_rate * double(t));
    const double x = m.start_x + double(m.direction) * m.speed * double(t);
    const double d = double(m.direction);
    const double w = 2.0 * std::numbers::pi * m.frequency * double(t) + m.phase;
    const double limb = 0.035 * h * m.bulk;
    std::vector<Capsule> parts;

    const double hip_y = m.ground - 0.5 * h;
    const double neck_x = x + d * m.lean * 0.34 * h;
    const double neck_y = hip_y - 0.32 * h;
    const double head_y = neck_y - 0.09 * h;
    parts.push_back({x, hip_y, neck_x, neck_y, 0.06 * h * m.bulk});
    parts.push_back({neck_x, head_y, neck_x, head_y, 0.075 * h});
    const double sh_x = neck_x - d * 0.01 * h, sh_y = neck_y + 0.03 * h;
    const double thigh = 0.26 * h, shin = 0.25 * h, upper = 0.17 * h, fore = 0.16 * h;

    // Angles measured from straight down, positive towards the facing side.
    auto add_limb = [&](double ox, double oy, double a1, double l1, double a2, double l2, double r) {
        const double ex = ox + d * l1 * std::sin(a1), ey = oy + l1 * std::cos(a1);
        const double hx = ex + d * l2 * std::sin(a2), hy = ey + l2 * std::cos(a2);
        parts.push_back({ox, oy, ex, ey, r});
        parts.push_back({ex, ey, hx, hy, r * 0.9});
    };

    if (!is_in_place(k.action)) {
        for (int side = 0; side < 2; ++side) {
            const double s = side == 0 ? std::sin(w) : -std::sin(w);
            const double c = side == 0 ? std::cos(w) : -std::cos(w);
            const double a_thigh = m.leg_amplitude * s;
            const double bend = m.knee * std::max(0.0, c);
            add_limb(x, hip_y, a_thigh, thigh, a_thigh - bend, shin, limb * 1.2);
            const double a_arm = -m.arm_amplitude * s;
            add_limb(sh_x, sh_y, a_arm, upper, a_arm + m.elbow, fore, limb);
        }
        return parts;
    }

    // Standing legs, slightly apart.
    add_limb(x, hip_y, 0.12, thigh, 0.08, shin, limb * 1.2);
    add_limb(x, hip_y, -0.12, thigh, -0.08, shin, limb * 1.2);
    switch (k.action) {
    case Action::boxing:
        // Guard with alternating straight punches towards the facing side.
        for (int side = 0; side < 2; ++side) {
            const double p = std::pow(std::max(0.0, side == 0 ? std::sin(w) : -std::sin(w)), 2.0) * m.arm_amplitude;
            const double a1 = 0.7 + 0.85 * p;
            const double a2 = 2.6 - 1.05 * p;
            add_limb(sh_x, sh_y, a1, upper, a2, fore, limb);
        }
        break;
    case Action::handclapping: {
        // Forearms open and close in front of the chest.
        const double c = 0.5 * (1.0 + std::sin(w)) * m.arm_amplitude;
        add_limb(sh_x, sh_y, 0.35, upper, 1.35 + 0.9 * c, fore, limb);
        add_limb(sh_x, sh_y, -0.35, upper, -1.35 - 0.9 * c, fore, limb);
        break;
    }
    default: {
        // Both arms raised, sweeping overhead.
        const double s = std::sin(w) * m.arm_amplitude;
        add_limb(sh_x, sh_y, 2.3 + s, upper, 2.6 + 1.6 * s, fore, limb);
        add_limb(sh_x, sh_y, -2.3 - s, upper, -2.6 - 1.6 * s, fore, limb);
        break;
    }
    }
    return parts;
}

/// Static scene for one (subject, scenario): smooth shading plus texture.
inline GrayFrame scene_background(int subject, Scenario sc, std::uint64_t seed)
{
    CounterRng rng(mix64(seed ^ (std::uint64_t(subject) << 8) ^ (std::uint64_t(sc) + 1) * 0xA5A5ull),
                   streams::synthetic);
    const bool indoor = sc == Scenario::s4;
    const double base = indoor ? draw(rng, 0.7, 0.8) : draw(rng, 0.55, 0.68);
    const double grad = draw(rng, -0.06, 0.06);
    const double tex = draw(rng, 0.02, 0.05);
    const double kx = draw(rng, 0.05, 0.25), ky = draw(rng, 0.05, 0.25), ph = draw(rng, 0.0, 6.28);
    const double horizon = draw(rng, 30.0, 60.0);
    GrayFrame bg(kFrameWidth, kFrameHeight);
    for (int y = 0; y < bg.height; ++y) {
        for (int x = 0; x < bg.width; ++x) {
            double v = base + grad * (double(y) / bg.height - 0.5);
            v += tex * std::sin(kx * x + ph) * std::sin(ky * y);
            if (!indoor && y < horizon) {
                v += 0.08;
            }
            bg.at(x, y) = std::clamp(v, 0.0, 1.0);
        }
    }
    return bg;
}

inline double segment_distance(double px, double py, const Capsule& c)
{
    const double vx = c.bx - c.ax, vy = c.by - c.ay;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0.0 ? ((px - c.ax) * vx + (py - c.ay) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = px - (c.ax + t * vx), dy = py - (c.ay + t * vy);
    return std::sqrt(dx * dx + dy * dy);
}

/// Uniform in [-1, 1) from a hash of (frame key, pixel).
inline double hash_noise(std::uint64_t frame_key, std::size_t pixel)
{
    return 2.0 * double(mix64(frame_key + pixel * 0x9E3779B97F4A7C15ull) >> 11) * 0x1.0p-53 - 1.0;
}

} // namespace detail

/// Frame t of sequence k.
inline GrayFrame render_frame(const RecordKey& k, const FigureMotion& m, const GrayFrame& background, int t,
                              const SyntheticOptions& opts)
{
    GrayFrame f = background;
    const std::uint64_t frame_key = detail::mix64(detail::key_hash(k, opts.seed) + std::uint64_t(t) * 7919ull);
    const double flicker = 0.01 * detail::hash_noise(frame_key, ~std::size_t{0});
    // Uniform noise scaled to the requested standard deviation.
    const double amp = opts.noise * std::sqrt(3.0);
    for (std::size_t i = 0; i < f.pixels.size(); ++i) {
        f.pixels[i] = f.pixels[i] + flicker + amp * detail::hash_noise(frame_key, i);
    }
    for (const auto& c : detail::figure_pose(k, m, t)) {
        const int x0 = std::max(0, int(std::floor(std::min(c.ax, c.bx) - c.radius - 1)));
        const int x1 = std::min(f.width - 1, int(std::ceil(std::max(c.ax, c.bx) + c.radius + 1)));
        const int y0 = std::max(0, int(std::floor(std::min(c.ay, c.by) - c.radius - 1)));
        const int y1 = std::min(f.height - 1, int(std::ceil(std::max(c.ay, c.by) + c.radius + 1)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double dist = detail::segment_distance(x + 0.5, y + 0.5, c);
                const double cover = std::clamp(c.radius + 0.5 - dist, 0.0, 1.0);
                if (cover > 0.0) {
                    double& p = f.at(x, y);
                    p = (1.0 - cover) * p + cover * m.tone;
                }
            }
        }
    }
    for (auto& p : f.pixels) {
        p = std::clamp(p, 0.0, 1.0);
    }
    return f;
}

/// Every frame of sequence k.
inline std::vector<GrayFrame> render_sequence(const RecordKey& k, const SyntheticOptions& opts)
{
    const auto m = figure_motion(k, opts.seed);
    const auto bg = detail::scene_background(k.subject, k.scenario, opts.seed);
    std::vector<GrayFrame> frames;
    frames.reserve(std::size_t(m.length));
    for (int t = 0; t < m.length; ++t) {
        frames.push_back(render_frame(k, m, bg, t, opts));
    }
    return frames;
}

/// Manifest of the full synthetic grid for the selected scenarios. In-place
/// records reference repetition 1 of the same subject's running sequence.
inline DatasetManifest synthetic_manifest(const SyntheticOptions& opts)
{
    if (opts.subjects < 1 || opts.subjects > kSubjects || opts.repetitions < 1 || opts.repetitions > kRepetitions) {
        throw UsageError("synthetic dataset needs 1..25 subjects and 1..4 repetitions");
    }
    DatasetManifest m;
    for (Scenario sc : opts.scenarios) {
        for (int s = 1; s <= opts.subjects; ++s) {
            for (int a = 0; a < kClasses; ++a) {
                for (int r = 1; r <= opts.repetitions; ++r) {
                    VideoRecord rec;
                    rec.key = {s, Action(a), sc, r};
                    rec.frame_dir = "synthetic/" + rec.id();
                    if (is_in_place(Action(a))) {
                        rec.background_ref = RecordKey{s, Action::running, sc, 1};
                    }
                    m.records.push_back(std::move(rec));
                }
            }
        }
    }
    m.sort();
    return m;
}

/// FrameSource rendering records procedurally.
inline FrameSource synthetic_source(const SyntheticOptions& opts)
{
    return [opts](const VideoRecord& rec) { return render_sequence(rec.key, opts); };
}

/// Writes every record as numbered PGM frames under root plus a manifest
/// (root/manifest.tsv) that load_manifest accepts.
inline std::filesystem::path write_synthetic_dataset(const std::filesystem::path& root, const SyntheticOptions& opts)
{
    DatasetManifest m = synthetic_manifest(opts);
    std::filesystem::create_directories(root);
    for (auto& rec : m.records) {
        const auto dir = root / rec.id();
        std::filesystem::create_directories(dir);
        const auto frames = render_sequence(rec.key, opts);
        for (std::size_t t = 0; t < frames.size(); ++t) {
            char name[32];
            std::snprintf(name, sizeof name, "%05zu.pgm", t + 1);
            write_pgm(dir / name, frames[t]);
        }
        rec.frame_dir = rec.id();
    }
    const auto path = root / "manifest.tsv";
    write_manifest(path, m);
    return path;
}

} // namespace toirc
