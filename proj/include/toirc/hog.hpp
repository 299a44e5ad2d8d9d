#pragma once

// Histogram of oriented gradients on binary silhouettes.

#include "error.hpp"
#include "image.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace toirc {

enum class OrientationVoting { bilinear, nearest };

struct HogParams {
    /// Cell edge in pixels.
    int cell = 8;
    /// Block edge in cells.
    int block = 2;
    /// Unsigned orientation bins over [0, 180) degrees, centered at 0, 180/bins, ...
    int bins = 9;
    /// Block step in cells.
    int block_stride = 1;
    OrientationVoting voting = OrientationVoting::bilinear;
    double epsilon = 1e-6;

    void validate() const
    {
        if (cell < 1 || block < 1 || bins < 2 || block_stride < 1 || !(epsilon >= 0.0)) {
            throw UsageError("invalid HOG parameters");
        }
    }

    int cells_x(int width) const { return width / cell; }
    int cells_y(int height) const { return height / cell; }
    int blocks_x(int width) const { return (cells_x(width) - block) / block_stride + 1; }
    int blocks_y(int height) const { return (cells_y(height) - block) / block_stride + 1; }
    int block_length() const { return block * block * bins; }

    /// Descriptor length for a frame; 9576 for 160x120 with the defaults.
    int length(int width, int height) const { return blocks_x(width) * blocks_y(height) * block_length(); }
};

/// Central-difference gradient with replicated borders: (Dx, Dy) at (x, y).
template <typename Frame>
inline std::pair<double, double> hog_gradient(const Frame& f, int x, int y)
{
    auto px = [&](int xx, int yy) {
        return f.at(std::clamp(xx, 0, f.width - 1), std::clamp(yy, 0, f.height - 1)) ? 1.0 : 0.0;
    };
    return {px(x + 1, y) - px(x - 1, y), px(x, y + 1) - px(x, y - 1)};
}

/// Adds a gradient's magnitude to a cell histogram.
inline void hog_vote(double* hist, double dx, double dy, const HogParams& p)
{
    const double mag = std::sqrt(dx * dx + dy * dy);
    if (mag == 0.0) {
        return;
    }
    double deg = std::atan2(dy, dx) * (180.0 / std::numbers::pi);
    deg = std::fmod(deg, 180.0);
    if (deg < 0.0) {
        deg += 180.0;
    }
    const double width = 180.0 / p.bins;
    const double pos = deg / width;
    if (p.voting == OrientationVoting::nearest) {
        hist[int(std::lround(pos)) % p.bins] += mag;
        return;
    }
    const int lo = int(std::floor(pos));
    const double frac = pos - lo;
    hist[lo % p.bins] += mag * (1.0 - frac);
    hist[(lo + 1) % p.bins] += mag * frac;
}

/// HOG descriptor: blocks row-major, cells within a block row-major, bins
/// ascending; each block L2-normalized as v / sqrt(|v|^2 + eps^2).
inline std::vector<double> hog(const BinaryFrame& b, const HogParams& p = {})
{
    p.validate();
    const int ncx = p.cells_x(b.width), ncy = p.cells_y(b.height);
    if (ncx < p.block || ncy < p.block) {
        throw DataError("frame " + std::to_string(b.width) + "x" + std::to_string(b.height) +
                        " too small for HOG block of " + std::to_string(p.block) + " cells of " +
                        std::to_string(p.cell) + " px");
    }
    std::vector<double> cells(std::size_t(ncx) * std::size_t(ncy) * std::size_t(p.bins), 0.0);
    for (int y = 0; y < ncy * p.cell; ++y) {
        for (int x = 0; x < ncx * p.cell; ++x) {
            const auto [dx, dy] = hog_gradient(b, x, y);
            if (dx == 0.0 && dy == 0.0) {
                continue;
            }
            const std::size_t c = std::size_t(y / p.cell) * std::size_t(ncx) + std::size_t(x / p.cell);
            hog_vote(&cells[c * std::size_t(p.bins)], dx, dy, p);
        }
    }
    const int nbx = p.blocks_x(b.width), nby = p.blocks_y(b.height);
    std::vector<double> out;
    out.reserve(std::size_t(nbx) * std::size_t(nby) * std::size_t(p.block_length()));
    std::vector<double> block(std::size_t(p.block_length()));
    for (int by = 0; by < nby; ++by) {
        for (int bx = 0; bx < nbx; ++bx) {
            double norm2 = 0.0;
            std::size_t k = 0;
            for (int cy = 0; cy < p.block; ++cy) {
                for (int cx = 0; cx < p.block; ++cx) {
                    const std::size_t c = std::size_t(by * p.block_stride + cy) * std::size_t(ncx) +
                                          std::size_t(bx * p.block_stride + cx);
                    for (int bin = 0; bin < p.bins; ++bin) {
                        const double v = cells[c * std::size_t(p.bins) + std::size_t(bin)];
                        block[k++] = v;
                        norm2 += v * v;
                    }
                }
            }
            const double scale = 1.0 / std::sqrt(norm2 + p.epsilon * p.epsilon);
            for (double v : block) {
                out.push_back(norm2 > 0.0 ? v * scale : 0.0);
            }
        }
    }
    return out;
}

} // namespace toirc
