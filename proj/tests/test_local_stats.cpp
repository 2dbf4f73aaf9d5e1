#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "catsafe/local_stats.hpp"
#include "catsafe/rng.hpp"

using namespace catsafe;

namespace {

ExpressionMatrix rows(const std::vector<std::vector<double>>& data) {
    std::vector<std::string> genes, arrays;
    std::vector<double> v;
    for (std::size_t i = 0; i < data.size(); ++i) {
        genes.push_back("g" + std::to_string(i + 1));
        v.insert(v.end(), data[i].begin(), data[i].end());
    }
    for (std::size_t j = 0; j < data.front().size(); ++j) arrays.push_back("a" + std::to_string(j + 1));
    return ExpressionMatrix(genes, arrays, v);
}

ExpressionMatrix random_matrix(std::size_t m, std::size_t n, std::uint64_t seed) {
    CounterRng rng(stream_key(seed));
    std::vector<std::vector<double>> d(m, std::vector<double>(n));
    for (auto& r : d) {
        for (auto& x : r) x = rng.normal();
    }
    return rows(d);
}

const Response kSix = Response::two_group({1, 1, 1, 2, 2, 2});

} // namespace

TEST(PooledT, HandComputedValue) {
    const auto t = compute_local(rows({{1, 2, 3, 3, 4, 5}, {0, 1, 0, 1, 0, 1}}), kSix, LocalStatKind::pooled_t());
    EXPECT_NEAR(t.values[0], -2.449489742783178, 1e-12);
}

TEST(LogFoldChange, MeanDifference) {
    const auto t = compute_local(rows({{1, 2, 3, 3, 4, 5}, {5, 1, 0, 2, 2, 2}}), kSix,
                                 LocalStatKind::log_fold_change());
    EXPECT_NEAR(t.values[0], -2.0, 1e-15);
    EXPECT_EQ(t.values[1], 0.0);
}

TEST(SamT, ZeroConstantEqualsPooledT) {
    const auto x = random_matrix(50, 6, 1);
    const auto a = compute_local(x, kSix, LocalStatKind::pooled_t());
    const auto b = compute_local(x, kSix, LocalStatKind::sam_t(0.0));
    EXPECT_EQ(a.values, b.values);
}

TEST(SamT, ScaleChangesSamButNotPooledT) {
    const std::vector<double> row{1.0, 2.5, 3.0, 2.0, 4.0, 5.5};
    std::vector<double> scaled(row);
    for (auto& v : scaled) v *= 7.0;
    const auto x = rows({row, scaled});
    const auto t = compute_local(x, kSix, LocalStatKind::pooled_t());
    EXPECT_NEAR(t.values[0], t.values[1], 1e-12);
    const auto s = compute_local(x, kSix, LocalStatKind::sam_t(0.5));
    EXPECT_GT(std::abs(s.values[0] - s.values[1]), 1e-3);
}

TEST(PooledT, ShiftInvariantAndSignFlipOnLabelSwap) {
    const auto x = random_matrix(30, 8, 2);
    const auto y = Response::two_group({1, 2, 1, 2, 1, 1, 2, 2});
    const auto swapped = Response::two_group({2, 1, 2, 1, 2, 2, 1, 1});
    std::vector<std::vector<double>> shifted;
    for (std::size_t i = 0; i < x.genes(); ++i) {
        std::vector<double> r(x.row(i).begin(), x.row(i).end());
        for (auto& v : r) v += 100.0 * static_cast<double>(i) - 37.5;
        shifted.push_back(r);
    }
    const auto t = compute_local(x, y, LocalStatKind::pooled_t());
    const auto ts = compute_local(rows(shifted), y, LocalStatKind::pooled_t());
    const auto tf = compute_local(x, swapped, LocalStatKind::pooled_t());
    for (std::size_t i = 0; i < x.genes(); ++i) {
        EXPECT_NEAR(ts.values[i], t.values[i], 1e-9);
        EXPECT_NEAR(tf.values[i], -t.values[i], 1e-12);
    }
}

TEST(AnovaF, HandComputedThreeGroups) {
    const auto y = Response::multi_group({1, 1, 1, 2, 2, 2, 3, 3, 3});
    const auto f = compute_local(rows({{1, 2, 3, 4, 5, 6, 7, 8, 9}, {0, 1, 0, 1, 0, 1, 0, 1, 0}}), y, LocalStatKind::anova_f());
    EXPECT_NEAR(f.values[0], 27.0, 1e-12);
}

TEST(AnovaF, TwoGroupEqualsSquaredPooledT) {
    const auto x = random_matrix(40, 10, 3);
    const auto y = Response::two_group({1, 1, 2, 1, 2, 2, 1, 2, 1, 2});
    const auto t = compute_local(x, y, LocalStatKind::pooled_t());
    const auto f = compute_local(x, y, LocalStatKind::anova_f());
    for (std::size_t i = 0; i < x.genes(); ++i) EXPECT_NEAR(f.values[i], t.values[i] * t.values[i], 1e-9);
}

TEST(PooledT, ZeroVarianceGenes) {
    const auto t = compute_local(rows({{2, 2, 2, 2, 2, 2}, {1, 2, 3, 3, 4, 5}}), kSix, LocalStatKind::pooled_t());
    EXPECT_EQ(t.values[0], 0.0);
    try {
        compute_local(rows({{1, 2, 3, 3, 4, 5}, {1, 1, 1, 2, 2, 2}}), kSix, LocalStatKind::pooled_t());
        FAIL() << "expected a degenerate gene";
    } catch (const DegenerateError& e) {
        EXPECT_EQ(e.genes(), (std::vector<std::size_t>{1}));
        EXPECT_NE(std::string(e.what()).find("g2"), std::string::npos);
    }
    const auto s = compute_local(rows({{1, 1, 1, 2, 2, 2}, {1, 1, 1, 2, 2, 2}}), kSix, LocalStatKind::sam_t(0.5));
    EXPECT_NEAR(s.values[0], -2.0, 1e-12);
}

TEST(LocalStatKindCompat, IncompatibleKindsAreRejected) {
    const auto x = random_matrix(5, 6, 4);
    const auto surv = Response::survival({1, 2, 3, 4, 5, 6}, {1, 0, 1, 1, 0, 1});
    const auto multi = Response::multi_group({1, 1, 2, 2, 3, 3});
    EXPECT_THROW(compute_local(x, surv, LocalStatKind::pooled_t()), InputError);
    EXPECT_THROW(compute_local(x, multi, LocalStatKind::log_fold_change()), InputError);
    EXPECT_THROW(compute_local(x, kSix, LocalStatKind::cox_wald()), InputError);
    EXPECT_NO_THROW(compute_local(x, multi, LocalStatKind::anova_f()));
    EXPECT_THROW(compute_local(x, Response::two_group({1, 2, 2, 2, 2, 2}), LocalStatKind::pooled_t()), InputError);
    EXPECT_THROW(LocalStatKind::parse("welch"), InputError);
    EXPECT_THROW(LocalStatKind::parse("sam-t", -1.0), InputError);
}

TEST(EmpiricalP, CountingRule) {
    LocalStatVector obs{{5.0, -5.0, 1.0}, LocalStatKind::pooled_t(), true};
    std::vector<std::vector<double>> res(9, std::vector<double>{1.0, 1.0, 1.0});
    const auto p = to_empirical_p(obs, res);
    EXPECT_DOUBLE_EQ(p.values[0], 0.1);
    EXPECT_DOUBLE_EQ(p.values[1], 1.0);
    EXPECT_DOUBLE_EQ(p.values[2], 1.0);
    EXPECT_EQ(p.kind.tag, LocalStatTag::EmpiricalP);
    EXPECT_FALSE(p.higher_is_more_de);
    const auto two = to_empirical_p(obs, res, Sidedness::TwoSided);
    EXPECT_DOUBLE_EQ(two.values[1], 0.1);
    EXPECT_THROW(to_empirical_p(obs, std::vector<std::vector<double>>{}), InputError);
}

TEST(LocalStatExport, TwoColumns) {
    const auto x = rows({{1, 2, 3, 3, 4, 5}, {0, 0, 0, 0, 0, 1}});
    const auto t = compute_local(x, kSix, LocalStatKind::log_fold_change());
    std::ostringstream out;
    write_local_stats(out, x, t);
    EXPECT_EQ(out.str(), "gene_id\tlog-fold-change\ng1\t-2\ng2\t-0.3333333333333333\n");
}

TEST(Engine, SharedEngineMatchesDirectComputation) {
    const auto x = random_matrix(20, 8, 9);
    const auto y = Response::two_group({1, 1, 1, 1, 2, 2, 2, 2});
    const LocalStatEngine engine(x, y, LocalStatKind::pooled_t());
    const std::vector<std::size_t> cols{0, 1, 2, 3, 4, 5, 6, 7};
    const std::vector<std::size_t> perm{4, 5, 6, 7, 0, 1, 2, 3};
    std::vector<double> out(20);
    engine.compute(DesignView{cols, perm}, out);
    const auto flipped = compute_local(x, Response::two_group({2, 2, 2, 2, 1, 1, 1, 1}), LocalStatKind::pooled_t());
    for (std::size_t i = 0; i < 20; ++i) EXPECT_NEAR(out[i], flipped.values[i], 1e-12);
    EXPECT_FALSE(engine.design_supported(DesignView{cols, std::vector<std::size_t>{0, 0, 0, 0, 0, 0, 0, 4}}));
}
