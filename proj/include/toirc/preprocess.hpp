#pragma once

// Keyframe selection and silhouette extraction: subsample, blur, subtract the
// background, binarize, drop small blobs, center horizontally.

#include "dataset.hpp"
#include "error.hpp"
#include "image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace toirc {

inline constexpr int kKeyframes = 10;

/// The ten silhouettes of one sequence. The first pad_count frames are empty
/// stand-ins for sequences too short to fill the window.
struct KeyframeSet {
    std::vector<BinaryFrame> frames;
    int pad_count = 0;
};

struct PreprocessParams {
    int subsample_factor = 3;
    double sigma = 2.0;
    double threshold = 0.15;
    int min_blob = 10;
    /// 4 or 8.
    int connectivity = 4;
};

struct SubsampledFrames {
    std::vector<GrayFrame> frames;
    int pad_count = 0;
};

/// Keeps every factor-th frame starting at index 0, then the 10 survivors
/// centered in the kept sequence (start offset floor((L'-10)/2)). Short
/// sequences are front-padded with black frames.
inline SubsampledFrames subsample_keyframes(std::span<const GrayFrame> seq, int factor = 3)
{
    if (seq.empty()) {
        throw DataError("cannot subsample an empty sequence");
    }
    if (factor < 1) {
        throw UsageError("subsample factor must be >= 1");
    }
    std::vector<const GrayFrame*> kept;
    for (std::size_t i = 0; i < seq.size(); i += std::size_t(factor)) {
        kept.push_back(&seq[i]);
    }
    SubsampledFrames out;
    const int survivors = int(kept.size());
    if (survivors >= kKeyframes) {
        const int start = (survivors - kKeyframes) / 2;
        for (int i = 0; i < kKeyframes; ++i) {
            out.frames.push_back(*kept[std::size_t(start + i)]);
        }
    } else {
        out.pad_count = kKeyframes - survivors;
        for (int i = 0; i < out.pad_count; ++i) {
            out.frames.emplace_back(seq[0].width, seq[0].height, 0.0);
        }
        for (const auto* f : kept) {
            out.frames.push_back(*f);
        }
    }
    return out;
}

/// Normalized 1-D Gaussian taps for radius ceil(3 sigma).
inline std::vector<double> gaussian_kernel(double sigma)
{
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw UsageError("gaussian sigma must be positive");
    }
    const int radius = int(std::ceil(3.0 * sigma));
    std::vector<double> taps(std::size_t(2 * radius + 1));
    double sum = 0.0;
    for (int d = -radius; d <= radius; ++d) {
        const double w = std::exp(-double(d * d) / (2.0 * sigma * sigma));
        taps[std::size_t(d + radius)] = w;
        sum += w;
    }
    for (double& w : taps) {
        w /= sum;
    }
    return taps;
}

/// Separable Gaussian blur with replicated borders.
inline GrayFrame gaussian_smooth(const GrayFrame& f, double sigma)
{
    const auto taps = gaussian_kernel(sigma);
    const int radius = int(taps.size() / 2);
    const int w = f.width, h = f.height;
    GrayFrame tmp(w, h), out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int d = -radius; d <= radius; ++d) {
                acc += taps[std::size_t(d + radius)] * f.at(std::clamp(x + d, 0, w - 1), y);
            }
            tmp.at(x, y) = acc;
        }
    }
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int d = -radius; d <= radius; ++d) {
                acc += taps[std::size_t(d + radius)] * tmp.at(x, std::clamp(y + d, 0, h - 1));
            }
            out.at(x, y) = std::clamp(acc, 0.0, 1.0);
        }
    }
    return out;
}

/// Removes every connected foreground component of at most max_size pixels.
inline void remove_small_blobs(BinaryFrame& b, int max_size, int connectivity = 4)
{
    if (connectivity != 4 && connectivity != 8) {
        throw UsageError("connectivity must be 4 or 8");
    }
    if (max_size <= 0) {
        return;
    }
    const int w = b.width, h = b.height;
    std::vector<std::int32_t> label(b.mask.size(), -1);
    std::vector<std::size_t> stack, component;
    for (std::size_t seed = 0; seed < b.mask.size(); ++seed) {
        if (!b.mask[seed] || label[seed] >= 0) {
            continue;
        }
        component.clear();
        stack.assign(1, seed);
        label[seed] = 1;
        while (!stack.empty()) {
            const std::size_t p = stack.back();
            stack.pop_back();
            component.push_back(p);
            const int x = int(p % std::size_t(w)), y = int(p / std::size_t(w));
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if ((dx == 0 && dy == 0) || (connectivity == 4 && dx != 0 && dy != 0)) {
                        continue;
                    }
                    const int nx = x + dx, ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) {
                        continue;
                    }
                    const std::size_t q = std::size_t(ny) * std::size_t(w) + std::size_t(nx);
                    if (b.mask[q] && label[q] < 0) {
                        label[q] = 1;
                        stack.push_back(q);
                    }
                }
            }
        }
        if (component.size() <= std::size_t(max_size)) {
            for (std::size_t p : component) {
                b.mask[p] = 0;
            }
        }
    }
}

/// Foreground where |f - bg| > threshold, then small blobs removed.
inline BinaryFrame segment_silhouette(const GrayFrame& f, const GrayFrame& bg, double threshold, int min_blob,
                                      int connectivity = 4)
{
    if (!f.same_shape(bg)) {
        throw DataError("frame is " + std::to_string(f.width) + "x" + std::to_string(f.height) + " but background is " +
                        std::to_string(bg.width) + "x" + std::to_string(bg.height));
    }
    BinaryFrame b(f.width, f.height);
    for (std::size_t i = 0; i < f.pixels.size(); ++i) {
        b.mask[i] = std::abs(f.pixels[i] - bg.pixels[i]) > threshold ? 1 : 0;
    }
    remove_small_blobs(b, min_blob, connectivity);
    return b;
}

/// Shifts the frame horizontally so the first column with the most foreground
/// pixels lands on column width/2. Empty frames pass through unchanged.
inline BinaryFrame center_silhouette(const BinaryFrame& b)
{
    std::vector<int> hist(std::size_t(b.width), 0);
    for (int y = 0; y < b.height; ++y) {
        for (int x = 0; x < b.width; ++x) {
            hist[std::size_t(x)] += b.at(x, y) ? 1 : 0;
        }
    }
    const auto peak = std::max_element(hist.begin(), hist.end());
    if (peak == hist.end() || *peak == 0) {
        return b;
    }
    const int shift = b.width / 2 - int(peak - hist.begin());
    if (shift == 0) {
        return b;
    }
    BinaryFrame out(b.width, b.height);
    for (int y = 0; y < b.height; ++y) {
        for (int x = 0; x < b.width; ++x) {
            const int src = x - shift;
            if (src >= 0 && src < b.width) {
                out.at(x, y) = b.at(src, y) ? 1 : 0;
            }
        }
    }
    return out;
}

/// Loads the frames of a record.
using FrameSource = std::function<std::vector<GrayFrame>(const VideoRecord&)>;

/// Reads the ordered .pgm files of rec.frame_dir.
inline std::vector<GrayFrame> load_frames(const VideoRecord& rec)
{
    const auto files = list_frames(rec.frame_dir);
    if (files.empty()) {
        throw DataError(rec.id() + ": no frames in " + rec.frame_dir.string());
    }
    std::vector<GrayFrame> frames;
    frames.reserve(files.size());
    for (const auto& p : files) {
        frames.push_back(read_pgm(p));
    }
    return frames;
}

/// Keyframes from already-loaded frames and a background frame.
inline KeyframeSet preprocess_frames(std::span<const GrayFrame> frames, const GrayFrame& background,
                                     const PreprocessParams& p)
{
    const auto sub = subsample_keyframes(frames, p.subsample_factor);
    const GrayFrame bg = gaussian_smooth(background, p.sigma);
    KeyframeSet out;
    out.pad_count = sub.pad_count;
    out.frames.reserve(kKeyframes);
    for (int i = 0; i < kKeyframes; ++i) {
        const GrayFrame& f = sub.frames[std::size_t(i)];
        if (i < sub.pad_count) {
            // Black padding carries no silhouette.
            out.frames.emplace_back(f.width, f.height);
            continue;
        }
        out.frames.push_back(
            center_silhouette(segment_silhouette(gaussian_smooth(f, p.sigma), bg, p.threshold, p.min_blob,
                                                 p.connectivity)));
    }
    return out;
}

/// Full silhouette pipeline for one record. The background is the first frame
/// of rec.background_ref when set, otherwise rec's own first frame.
inline KeyframeSet preprocess_sequence(const VideoRecord& rec, const DatasetManifest& manifest,
                                       const PreprocessParams& p, const FrameSource& source = load_frames)
{
    const auto frames = source(rec);
    if (frames.empty()) {
        throw DataError(rec.id() + ": empty sequence");
    }
    GrayFrame background;
    if (rec.background_ref) {
        const VideoRecord* ref = manifest.find(*rec.background_ref);
        if (!ref) {
            throw DataError(rec.id() + ": background_ref " + rec.background_ref->id() + " not found");
        }
        auto bg_frames = source(*ref);
        if (bg_frames.empty()) {
            throw DataError(ref->id() + ": empty background sequence");
        }
        background = std::move(bg_frames.front());
    } else {
        background = frames.front();
    }
    try {
        return preprocess_frames(frames, background, p);
    } catch (const DataError& e) {
        throw DataError(rec.id() + ": " + e.what());
    }
}

// --- keyframe cache ---------------------------------------------------------
//
// Text header "width height count pad_count\n" followed by count packed
// bitmaps, row-major, most significant bit first, ceil(width*height/8) bytes each.

inline void write_keyframes(const std::filesystem::path& path, const KeyframeSet& k)
{
    if (k.frames.empty()) {
        throw DataError("empty keyframe set");
    }
    const int w = k.frames[0].width, h = k.frames[0].height;
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out << w << ' ' << h << ' ' << k.frames.size() << ' ' << k.pad_count << '\n';
    const std::size_t bytes = (std::size_t(w) * std::size_t(h) + 7) / 8;
    std::vector<unsigned char> packed(bytes);
    for (const auto& f : k.frames) {
        std::fill(packed.begin(), packed.end(), 0);
        for (std::size_t i = 0; i < f.mask.size(); ++i) {
            if (f.mask[i]) {
                packed[i / 8] |= static_cast<unsigned char>(0x80u >> (i % 8));
            }
        }
        out.write(reinterpret_cast<const char*>(packed.data()), std::streamsize(bytes));
    }
}

inline KeyframeSet read_keyframes(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open keyframe cache " + path.string());
    }
    int w = 0, h = 0, count = 0, pad = 0;
    in >> w >> h >> count >> pad;
    if (!in || in.get() != '\n' || w <= 0 || h <= 0 || count <= 0 || pad < 0 || pad > count) {
        throw DataError("malformed keyframe cache " + path.string());
    }
    KeyframeSet k;
    k.pad_count = pad;
    const std::size_t bytes = (std::size_t(w) * std::size_t(h) + 7) / 8;
    std::vector<unsigned char> packed(bytes);
    for (int n = 0; n < count; ++n) {
        in.read(reinterpret_cast<char*>(packed.data()), std::streamsize(bytes));
        if (in.gcount() != std::streamsize(bytes)) {
            throw DataError("truncated keyframe cache " + path.string());
        }
        BinaryFrame f(w, h);
        for (std::size_t i = 0; i < f.mask.size(); ++i) {
            f.mask[i] = (packed[i / 8] >> (7 - i % 8)) & 1u;
        }
        k.frames.push_back(std::move(f));
    }
    return k;
}

} // namespace toirc
