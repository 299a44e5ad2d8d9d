#include "toirc/readout.hpp"

#include <gtest/gtest.h>

#include <Eigen/LU>

using namespace toirc;

namespace {

DesignMatrix random_design(Eigen::Index n, Eigen::Index f, int classes, std::uint64_t seed)
{
    CounterRng r(seed, 21);
    std::vector<Vector> rows;
    std::vector<int> labels;
    for (Eigen::Index i = 0; i < n; ++i) {
        Vector v(f);
        for (Eigen::Index j = 0; j < f; ++j) {
            v(j) = r.next_normal();
        }
        rows.push_back(v);
        labels.push_back(int(r.next_below(std::uint64_t(classes))));
    }
    return make_design(rows, labels, classes);
}

} // namespace

TEST(ToiSet, ParsesAndValidates)
{
    const auto t = ToiSet::parse("1,5,10");
    EXPECT_EQ(t.indices(), (std::vector<int>{1, 5, 10}));
    EXPECT_EQ(t.str(), "1,5,10");
    EXPECT_THROW(ToiSet::parse("5,1"), UsageError);
    EXPECT_THROW(ToiSet::parse("0"), UsageError);
    EXPECT_THROW(ToiSet::parse("11"), UsageError);
    EXPECT_THROW(ToiSet::parse("1,x"), UsageError);
    EXPECT_THROW(ToiSet::parse(""), UsageError);
}

TEST(ToiSet, ConcatenatesStatesInOrder)
{
    RowMatrix s(10, 3);
    for (int t = 0; t < 10; ++t) {
        s.row(t) << t, 10 + t, 20 + t;
    }
    const Vector v = concat_toi(s, ToiSet({2, 10}));
    EXPECT_EQ(v, (Vector(6) << 1, 11, 21, 9, 19, 29).finished());
}

TEST(Ridge, MatchesExplicitInverse)
{
    for (std::uint64_t s = 0; s < 50; ++s) {
        const Eigen::Index n = 5 + Eigen::Index(s % 16), f = 1 + Eigen::Index(s % 10);
        const auto d = random_design(n, f, 6, s);
        const double lambda = (s % 3 == 0) ? 0.0 : std::pow(10.0, -double(s % 5));
        if (lambda == 0.0 && n < f) {
            continue;
        }
        const Matrix a = d.x.transpose() * d.x + lambda * Matrix::Identity(f, f);
        const Matrix want = (a.inverse() * d.x.transpose() * d.targets).transpose();
        const Matrix got = ridge_weights(d, lambda);
        EXPECT_LT((got - want).norm(), 1e-8 * std::max(1.0, want.norm())) << "system " << s;
    }
}

TEST(Ridge, DualRouteEqualsPrimal)
{
    const auto d = random_design(8, 30, 6, 3);
    const Matrix dual = ridge_weights(d, 0.5);
    const Matrix a = d.x.transpose() * d.x + 0.5 * Matrix::Identity(30, 30);
    const Matrix primal = (a.ldlt().solve(d.x.transpose() * d.targets)).transpose();
    EXPECT_LT((dual - primal).norm(), 1e-10);
}

TEST(Ridge, BiasColumnIsAppended)
{
    const auto d = random_design(40, 4, 3, 9);
    RidgeOptions o;
    o.bias = true;
    const Matrix w = ridge_weights(d, 1e-3, o);
    ASSERT_EQ(w.cols(), 5);
    Matrix xb(40, 5);
    xb << d.x, Matrix::Ones(40, 1);
    const Matrix a = xb.transpose() * xb + 1e-3 * Matrix::Identity(5, 5);
    EXPECT_LT((w - (a.inverse() * xb.transpose() * d.targets).transpose()).norm(), 1e-9);
    const auto m = train_ridge(d, 1e-3, ToiSet({10}), 4, o);
    const Vector v = d.x.row(0).transpose();
    EXPECT_LT((readout_outputs(m, v) - w.leftCols(4) * v - w.col(4)).norm(), 1e-14);
}

TEST(Ridge, SingularUnregularizedSystemThrows)
{
    auto d = random_design(20, 3, 2, 1);
    d.x.col(2) = d.x.col(1);
    EXPECT_THROW(ridge_weights(d, 0.0), NumericError);
    EXPECT_NO_THROW(ridge_weights(d, 1e-6));
    EXPECT_THROW(ridge_weights(d, -1.0), UsageError);
}

TEST(Ridge, SeparableDataIsClassifiedPerfectly)
{
    std::vector<Vector> rows;
    std::vector<int> labels;
    for (int c = 0; c < 6; ++c) {
        for (int i = 0; i < 5; ++i) {
            Vector v = Vector::Zero(6);
            v(c) = 1.0 + 0.01 * i;
            rows.push_back(v);
            labels.push_back(c);
        }
    }
    const auto m = train_ridge(make_design(rows, labels, 6), 1e-6, ToiSet({1}), 6);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(classify(m, rows[i]), labels[i]);
    }
}

TEST(Argmax, LowestIndexWinsTies)
{
    EXPECT_EQ(argmax_lowest((Vector(4) << 0.1, 0.7, 0.7, 0.2).finished()), 1);
    EXPECT_EQ(argmax_lowest((Vector(3) << 0.0, 0.0, 0.0).finished()), 0);
}

TEST(ToiSearch, ExhaustiveCountsAndOrder)
{
    EXPECT_EQ(toi_subsets(1).size(), 10u);
    EXPECT_EQ(toi_subsets(3).size(), 120u);
    EXPECT_EQ(toi_subsets(10).size(), 1u);
    EXPECT_EQ(toi_subsets(2)[0].str(), "1,2");
    EXPECT_EQ(toi_subsets(2).back().str(), "9,10");
}

TEST(ToiSearch, RanksByScoreThenLexicographically)
{
    // Score favours sets containing 10 and 1; ties resolve lexicographically.
    auto score = [](const ToiSet& s) {
        double v = 0.0;
        for (int t : s.indices()) {
            v += (t == 10 || t == 1) ? 1.0 : 0.0;
        }
        return v;
    };
    const auto r = toi_search(score, 2, ToiSearchMode::exhaustive);
    ASSERT_EQ(r.size(), 45u);
    EXPECT_EQ(r[0].toi.str(), "1,10");
    EXPECT_EQ(r[1].toi.str(), "1,2");
    const auto h = toi_search(score, 3, ToiSearchMode::ranked);
    EXPECT_LT(h.size(), 120u);
    EXPECT_EQ(h[0].accuracy, 2.0);
}

TEST(ToiSearch, HeuristicFamilyLeadsWithCanonicalSets)
{
    EXPECT_EQ(toi_heuristic_family(1)[0].str(), "10");
    EXPECT_EQ(toi_heuristic_family(2)[0].str(), "1,10");
    EXPECT_EQ(toi_heuristic_family(3)[0].str(), "1,5,10");
}

TEST(Readout, ModelFileRoundTrips)
{
    const auto d = random_design(30, 12, 6, 2);
    auto m = train_ridge(d, 0.1, ToiSet({1, 5, 10}), 4);
    m.class_names = {"a", "b", "c", "d", "e", "f"};
    const auto path = std::filesystem::temp_directory_path() / "toirc_readout.bin";
    write_readout_model(path, m);
    const auto back = read_readout_model(path);
    EXPECT_EQ(back.weights, m.weights);
    EXPECT_EQ(back.toi.str(), "1,5,10");
    EXPECT_EQ(back.nodes, 4);
    EXPECT_EQ(back.lambda, 0.1);
}
