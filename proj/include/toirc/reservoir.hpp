#pragma once

// Discrete-time ring reservoir with a sine nonlinearity:
//
//   x_0(n+1) = sin(alpha * x_{N-1}(n-1) + beta * (M u(n))_0)
//   x_i(n+1) = sin(alpha * x_{i-1}(n)   + beta * (M u(n))_i),  i = 1..N-1
//
// Node 0 reads the last node one step further back, which is how the
// input/loop desynchronization of the delay system shows up in discrete time.

#include "binary_io.hpp"
#include "error.hpp"
#include "linalg.hpp"
#include "random.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace toirc {

enum class ResetMode { hard_zero, null_washout };

/// Which history entry node 0 reads from the last node.
enum class RingLag {
    /// x_{N-1}(n-1), the delayed-feedback form.
    delayed,
    /// x_{N-1}(n), a plain ring.
    strict,
};

struct ReservoirConfig {
    int nodes = 600;
    double alpha = 1.5;
    double beta = 0.0032;
    std::uint64_t mask_seed = 1;
    ResetMode reset_mode = ResetMode::hard_zero;
    /// Zero-input steps for null_washout.
    int washout_steps = 2;
    RingLag lag = RingLag::delayed;

    void validate() const
    {
        if (nodes < 1) {
            throw UsageError("reservoir needs at least one node");
        }
        if (!std::isfinite(alpha) || !std::isfinite(beta)) {
            throw UsageError("reservoir alpha and beta must be finite");
        }
        if (washout_steps < 0) {
            throw UsageError("washout steps must be >= 0");
        }
    }
};

/// N x K input weights, i.i.d. uniform in [-1, 1).
using InputMask = Matrix;

/// Entry (i, k) is draw i*K + k of the Philox stream (mask_seed, "MASK").
inline InputMask generate_mask(int nodes, int inputs, std::uint64_t seed)
{
    if (nodes < 1 || inputs < 1) {
        throw UsageError("mask dimensions must be positive");
    }
    const CounterRng rng(seed, streams::input_mask);
    InputMask m(nodes, inputs);
    for (int i = 0; i < nodes; ++i) {
        for (int k = 0; k < inputs; ++k) {
            const std::uint64_t bits = rng.bits_at(std::uint64_t(i) * std::uint64_t(inputs) + std::uint64_t(k));
            m(i, k) = 2.0 * (static_cast<double>(bits >> 11) * 0x1.0p-53) - 1.0;
        }
    }
    return m;
}

/// x(n) and x(n-1).
struct ReservoirState {
    Vector current;
    Vector previous;

    static ReservoirState zero(int nodes) { return {Vector::Zero(nodes), Vector::Zero(nodes)}; }
};

/// One update from a precomputed drive beta * M u(n).
inline Vector step_driven(const Vector& current, const Vector& previous, const Vector& drive, double alpha,
                          RingLag lag = RingLag::delayed)
{
    const Eigen::Index n = current.size();
    Vector next(n);
    next(0) = std::sin(alpha * (lag == RingLag::delayed ? previous(n - 1) : current(n - 1)) + drive(0));
    for (Eigen::Index i = 1; i < n; ++i) {
        next(i) = std::sin(alpha * current(i - 1) + drive(i));
    }
    return next;
}

/// x(n+1) from the last two states and the input u(n).
inline Vector step(const ReservoirState& state, const Eigen::Ref<const Vector>& u, const ReservoirConfig& cfg,
                   const InputMask& mask)
{
    if (u.size() != mask.cols()) {
        throw DataError("input has " + std::to_string(u.size()) + " entries, mask expects " +
                        std::to_string(mask.cols()));
    }
    if (state.current.size() != mask.rows() || state.previous.size() != mask.rows()) {
        throw DataError("state size does not match the mask");
    }
    if (!u.allFinite()) {
        throw NumericError("non-finite reservoir input");
    }
    const Vector drive = cfg.beta * (mask * u);
    return step_driven(state.current, state.previous, drive, cfg.alpha, cfg.lag);
}

/// States x(1)..x(T), one row per timestep.
struct Trajectory {
    RowMatrix states;
    std::string record_id;
};

/// Brings the state back to rest before a sequence.
inline void reset_state(ReservoirState& state, const ReservoirConfig& cfg)
{
    const Eigen::Index n = state.current.size();
    if (cfg.reset_mode == ResetMode::hard_zero) {
        state = ReservoirState::zero(int(n));
        return;
    }
    const Vector zero = Vector::Zero(n);
    for (int s = 0; s < cfg.washout_steps; ++s) {
        Vector next = step_driven(state.current, state.previous, zero, cfg.alpha, cfg.lag);
        state.previous = std::move(state.current);
        state.current = std::move(next);
    }
}

/// Drives the reservoir with one input sequence (rows = timesteps).
///
/// state carries x(n), x(n-1) across calls; with reset it is first cleared
/// per cfg.reset_mode. Without reset the caller must feed sequences in a
/// fixed order.
inline Trajectory run_sequence(const ReservoirConfig& cfg, const InputMask& mask,
                               const Eigen::Ref<const RowMatrix>& inputs, ReservoirState& state, bool reset,
                               int expected_steps = 10)
{
    if (inputs.rows() != expected_steps || inputs.cols() != mask.cols()) {
        throw DataError("reservoir input is " + std::to_string(inputs.rows()) + "x" + std::to_string(inputs.cols()) +
                        ", expected " + std::to_string(expected_steps) + "x" + std::to_string(mask.cols()));
    }
    if (!inputs.allFinite()) {
        throw NumericError("non-finite reservoir input");
    }
    if (state.current.size() != mask.rows()) {
        state = ReservoirState::zero(int(mask.rows()));
    }
    if (reset) {
        reset_state(state, cfg);
    }
    // All drives in one product: (T x K) * (K x N).
    const RowMatrix drives = cfg.beta * (inputs * mask.transpose());
    Trajectory t;
    t.states.resize(inputs.rows(), mask.rows());
    for (Eigen::Index n = 0; n < inputs.rows(); ++n) {
        Vector next = step_driven(state.current, state.previous, drives.row(n).transpose(), cfg.alpha, cfg.lag);
        state.previous = std::move(state.current);
        state.current = std::move(next);
        t.states.row(n) = state.current.transpose();
    }
    return t;
}

/// Convenience overload starting from a reset state.
inline Trajectory run_sequence(const ReservoirConfig& cfg, const InputMask& mask,
                               const Eigen::Ref<const RowMatrix>& inputs, int expected_steps = 10)
{
    ReservoirState state = ReservoirState::zero(int(mask.rows()));
    return run_sequence(cfg, mask, inputs, state, true, expected_steps);
}

// --- trajectory cache -------------------------------------------------------
//
// Header "T N mask_seed alpha beta reset_mode", then T*N little-endian doubles.

inline std::string to_string(ResetMode m) { return m == ResetMode::hard_zero ? "hard_zero" : "null_washout"; }

inline void write_trajectory(const std::filesystem::path& path, const Trajectory& t, const ReservoirConfig& cfg)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out.precision(17);
    out << t.states.rows() << ' ' << t.states.cols() << ' ' << cfg.mask_seed << ' ' << cfg.alpha << ' ' << cfg.beta
        << ' ' << to_string(cfg.reset_mode) << '\n';
    write_f64_le(out, {t.states.data(), std::size_t(t.states.size())});
}

inline Trajectory read_trajectory(const std::filesystem::path& path, const ReservoirConfig& cfg)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open trajectory " + path.string());
    }
    std::istringstream header(read_header_line(in, path.string()));
    Eigen::Index rows = 0, cols = 0;
    std::uint64_t seed = 0;
    double alpha = 0, beta = 0;
    std::string mode;
    header >> rows >> cols >> seed >> alpha >> beta >> mode;
    if (!header || rows <= 0 || cols <= 0) {
        throw DataError("malformed trajectory header in " + path.string());
    }
    if (seed != cfg.mask_seed || alpha != cfg.alpha || beta != cfg.beta || mode != to_string(cfg.reset_mode) ||
        cols != cfg.nodes) {
        throw DataError("trajectory " + path.string() + " was produced by a different reservoir config");
    }
    Trajectory t;
    t.states.resize(rows, cols);
    read_f64_le(in, {t.states.data(), std::size_t(t.states.size())}, path.string());
    return t;
}

} // namespace toirc
