#include "toirc/reservoir.hpp"

#include "../common/oracles.hpp"

#include <gtest/gtest.h>

using namespace toirc;

namespace {

RowMatrix random_inputs(int steps, int dims, std::uint64_t seed)
{
    CounterRng r(seed, 17);
    RowMatrix u(steps, dims);
    for (int i = 0; i < steps; ++i) {
        for (int k = 0; k < dims; ++k) {
            u(i, k) = r.next_symmetric();
        }
    }
    return u;
}

} // namespace

TEST(Mask, DeterministicAndUniform)
{
    const auto a = generate_mask(200, 30, 4);
    EXPECT_EQ(a, generate_mask(200, 30, 4));
    EXPECT_NE(a, generate_mask(200, 30, 5));
    EXPECT_GE(a.minCoeff(), -1.0);
    EXPECT_LT(a.maxCoeff(), 1.0);
    EXPECT_NEAR(a.mean(), 0.0, 0.03);
    EXPECT_NEAR(a.array().square().mean(), 1.0 / 3.0, 0.02);
    // Entry (i, k) is draw i*K + k.
    const CounterRng rng(4, streams::input_mask);
    EXPECT_DOUBLE_EQ(a(3, 7), 2.0 * (double(rng.bits_at(3 * 30 + 7) >> 11) * 0x1.0p-53) - 1.0);
}

TEST(Ring, MatchesDenseSimulator)
{
    for (auto lag : {RingLag::delayed, RingLag::strict}) {
        for (int n = 2; n <= 16; ++n) {
            ReservoirConfig cfg;
            cfg.nodes = n;
            cfg.alpha = 0.3 + 0.1 * n;
            cfg.beta = 0.5;
            cfg.lag = lag;
            const auto mask = generate_mask(n, 4, std::uint64_t(n));
            const auto u = random_inputs(10, 4, std::uint64_t(n));
            const auto t = run_sequence(cfg, mask, u);
            const auto ref = oracle::dense_reservoir(cfg.alpha, cfg.beta, mask, u, lag == RingLag::delayed);
            EXPECT_LT((t.states - ref).cwiseAbs().maxCoeff(), 1e-12) << "N=" << n;
        }
    }
}

TEST(Ring, SingleStepByHand)
{
    ReservoirConfig cfg;
    cfg.nodes = 3;
    cfg.alpha = 2.0;
    cfg.beta = 1.0;
    ReservoirState s{Vector::Zero(3), Vector::Zero(3)};
    s.current << 0.1, 0.2, 0.3;
    s.previous << 0.4, 0.5, 0.6;
    const InputMask mask = Matrix::Identity(3, 3);
    const Vector u = (Vector(3) << 0.01, 0.02, 0.03).finished();
    const Vector next = step(s, u, cfg, mask);
    EXPECT_DOUBLE_EQ(next(0), std::sin(2.0 * 0.6 + 0.01));
    EXPECT_DOUBLE_EQ(next(1), std::sin(2.0 * 0.1 + 0.02));
    EXPECT_DOUBLE_EQ(next(2), std::sin(2.0 * 0.2 + 0.03));
}

TEST(Ring, ResetMakesSequencesIndependent)
{
    ReservoirConfig cfg;
    cfg.nodes = 20;
    cfg.beta = 0.2;
    const auto mask = generate_mask(20, 5, 1);
    const auto a = random_inputs(10, 5, 1), b = random_inputs(10, 5, 2);
    ReservoirState s = ReservoirState::zero(20);
    run_sequence(cfg, mask, a, s, true);
    const auto with_reset = run_sequence(cfg, mask, b, s, true);
    EXPECT_EQ(with_reset.states, run_sequence(cfg, mask, b).states);

    ReservoirState carried = ReservoirState::zero(20);
    run_sequence(cfg, mask, a, carried, true);
    const auto without = run_sequence(cfg, mask, b, carried, false);
    EXPECT_GT((without.states - with_reset.states).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Ring, NullWashoutRunsZeroInputSteps)
{
    ReservoirConfig cfg;
    cfg.nodes = 6;
    cfg.alpha = 0.5;
    cfg.reset_mode = ResetMode::null_washout;
    cfg.washout_steps = 3;
    ReservoirState s{Vector::Constant(6, 0.4), Vector::Constant(6, -0.2)};
    ReservoirState manual = s;
    reset_state(s, cfg);
    for (int i = 0; i < 3; ++i) {
        Vector next = step_driven(manual.current, manual.previous, Vector::Zero(6), 0.5);
        manual.previous = manual.current;
        manual.current = next;
    }
    EXPECT_EQ(s.current, manual.current);
    EXPECT_EQ(s.previous, manual.previous);
    // With alpha < 1 the rest state is the attractor.
    cfg.washout_steps = 400;
    reset_state(s, cfg);
    EXPECT_LT(s.current.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Ring, RejectsBadInputs)
{
    ReservoirConfig cfg;
    cfg.nodes = 4;
    const auto mask = generate_mask(4, 3, 1);
    EXPECT_THROW(run_sequence(cfg, mask, random_inputs(9, 3, 1)), DataError);
    EXPECT_THROW(run_sequence(cfg, mask, random_inputs(10, 2, 1)), DataError);
    RowMatrix bad = random_inputs(10, 3, 1);
    bad(4, 1) = std::numeric_limits<double>::infinity();
    EXPECT_THROW(run_sequence(cfg, mask, bad), NumericError);
    EXPECT_THROW(generate_mask(0, 3, 1), UsageError);
}

TEST(Ring, TrajectoryCacheRoundTrips)
{
    ReservoirConfig cfg;
    cfg.nodes = 8;
    const auto mask = generate_mask(8, 3, 2);
    auto t = run_sequence(cfg, mask, random_inputs(10, 3, 3));
    const auto path = std::filesystem::temp_directory_path() / "toirc_traj.bin";
    write_trajectory(path, t, cfg);
    EXPECT_EQ(read_trajectory(path, cfg).states, t.states);
    auto other = cfg;
    other.alpha = 1.0;
    EXPECT_THROW(read_trajectory(path, other), DataError);
}
