#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "catsafe/rng.hpp"
#include "catsafe/synthetic.hpp"

using namespace catsafe;

namespace {

double sample_corr(const ExpressionMatrix& x, std::size_t a, std::size_t b) {
    const std::size_t n = x.arrays();
    double ma = 0, mb = 0;
    for (std::size_t j = 0; j < n; ++j) {
        ma += x(a, j) / n;
        mb += x(b, j) / n;
    }
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t j = 0; j < n; ++j) {
        sab += (x(a, j) - ma) * (x(b, j) - mb);
        saa += (x(a, j) - ma) * (x(a, j) - ma);
        sbb += (x(b, j) - mb) * (x(b, j) - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

} // namespace

TEST(SynthMatrix, DeterministicPerSeed) {
    const auto d = SyntheticDesign::uniform_blocks(30, 6, 5, 0.3);
    const auto a = synth_matrix(d, 11);
    const auto b = synth_matrix(d, 11);
    const auto c = synth_matrix(d, 12);
    EXPECT_EQ(a.values(), b.values());
    EXPECT_NE(a.values(), c.values());
    EXPECT_EQ(a.genes(), 30u);
    EXPECT_EQ(a.arrays(), 6u);
}

TEST(SynthMatrix, BlockCorrelationIsRealized) {
    const auto d = SyntheticDesign::uniform_blocks(6, 10000, 3, 0.5);
    const auto x = synth_matrix(d, 3);
    const double within = sample_corr(x, 0, 1);
    EXPECT_GE(within, 0.47);
    EXPECT_LE(within, 0.53);
    EXPECT_NEAR(sample_corr(x, 0, 4), 0.0, 0.03);
}

TEST(SynthMatrix, CrossCorrelationAndLayout) {
    auto d = SyntheticDesign::uniform_blocks(6, 4000, 3, 0.4);
    d.cross_rho = 0.2;
    const auto x = synth_matrix(d, 4);
    EXPECT_NEAR(sample_corr(x, 0, 5), 0.2, 0.05);
    const auto c = d.correlation();
    EXPECT_DOUBLE_EQ(c(0, 1), 0.4);
    EXPECT_DOUBLE_EQ(c(0, 3), 0.2);
    const auto blocks = d.block_of_gene();
    EXPECT_EQ(blocks[0], blocks[2]);
    EXPECT_NE(blocks[2], blocks[3]);
}

TEST(SynthMatrix, NonPsdCorrelationIsRejected) {
    auto d = SyntheticDesign::uniform_blocks(6, 10, 3, -0.8);
    EXPECT_THROW(d.validate(), InputError);
}

TEST(RandomizeResponse, BalancedGroups) {
    const auto y = randomize_response(100, 5);
    EXPECT_EQ(y.group_size(1), 50u);
    EXPECT_EQ(y.group_size(2), 50u);
    EXPECT_THROW(randomize_response(5, 1), InputError);
}

TEST(RandomizeResponse, UniformOverLabelings) {
    std::map<std::vector<int>, int> counts;
    const int draws = 6000;
    for (int s = 0; s < draws; ++s) ++counts[randomize_response(4, stream_key(77, s)).labels()];
    ASSERT_EQ(counts.size(), 6u);
    double chi2 = 0.0;
    for (const auto& [labels, c] : counts) chi2 += (c - 1000.0) * (c - 1000.0) / 1000.0;
    // Upper 0.001 point of chi-square with 5 df.
    EXPECT_LT(chi2, 20.515);
}

TEST(SurvivalResponse, HasAnEvent) {
    for (std::uint64_t s = 0; s < 50; ++s) {
        const auto y = random_survival_response(3, s);
        EXPECT_GE(y.event_count(), 1u);
    }
}

TEST(InjectDe, StandardizesAndShifts) {
    const auto d = SyntheticDesign::uniform_blocks(4, 200, 1, 0.0);
    const auto x = synth_matrix(d, 8);
    const auto y = randomize_response(200, 9);
    const std::vector<std::size_t> genes{1};
    const auto z = inject_de(x, y, genes, 3.0);
    double m1 = 0, m2 = 0, all = 0;
    for (std::size_t j = 0; j < 200; ++j) {
        (y.labels()[j] == 1 ? m1 : m2) += z(1, j) / 100;
        all += x(1, j);
    }
    double m1x = 0, m2x = 0, mean = all / 200, ss = 0;
    for (std::size_t j = 0; j < 200; ++j) {
        (y.labels()[j] == 1 ? m1x : m2x) += x(1, j) / 100;
        ss += (x(1, j) - mean) * (x(1, j) - mean);
    }
    const double sd = std::sqrt(ss / 199);
    EXPECT_NEAR((m1 - m2) - (m1x - m2x) / sd, 3.0 * std::sqrt(0.02), 1e-12);
    EXPECT_NEAR(3.0 * std::sqrt(0.02), 0.4243, 1e-4);
    for (std::size_t j = 0; j < 200; ++j) EXPECT_EQ(z(0, j), x(0, j));
}

TEST(InjectProfile, MatchesInjectDeOnShiftedRows) {
    const auto d = SyntheticDesign::uniform_blocks(5, 12, 1, 0.0);
    const auto x = synth_matrix(d, 10);
    const auto y = randomize_response(12, 11);
    const std::vector<double> delta{0, 2, 0, 2, 0};
    const std::vector<std::size_t> genes{1, 3};
    EXPECT_EQ(inject_profile(x, y, delta).values(), inject_de(x, y, genes, 2.0).values());
}

TEST(Strata, LargestRemainderCounts) {
    StrataSpec s{{0.0, 3.0}, {2.0 / 3.0, 1.0 / 3.0}};
    EXPECT_EQ(s.counts(30), (std::vector<std::size_t>{20, 10}));
    EXPECT_EQ(s.counts(10), (std::vector<std::size_t>{7, 3}));
    EXPECT_TRUE(s.exact_for(30));
    EXPECT_FALSE(s.exact_for(10));
    StrataSpec bad{{0.0, 1.0}, {0.5, 0.4}};
    EXPECT_THROW(bad.validate(), InputError);
}

TEST(Strata, CategoriesAndComplementShareProportions) {
    StrataSpec s{{0.0, 3.0}, {2.0 / 3.0, 1.0 / 3.0}};
    const auto cats = partition_categories(90, 30, 2);
    const auto labels = assign_strata(s, cats, 90);
    for (std::size_t start : {0u, 30u, 60u}) {
        std::size_t ones = 0;
        for (std::size_t i = start; i < start + 30; ++i) ones += labels[i] == 1;
        EXPECT_EQ(ones, 10u);
    }
    const auto deltas = strata_deltas(s, labels);
    for (std::size_t i = 0; i < 90; ++i) EXPECT_EQ(deltas[i], s.deltas[labels[i]]);
    CategoryCollection overlap{{"A", "", {0, 1}}, {"B", "", {1, 2}}};
    EXPECT_THROW(assign_strata(s, overlap, 5), InputError);
}

TEST(Categories, WindowsAndPartitions) {
    const auto w = window_categories(500, 40, 5, 50, 3);
    ASSERT_EQ(w.size(), 40u);
    for (const auto& c : w) {
        EXPECT_GE(c.members.size(), 5u);
        EXPECT_LE(c.members.size(), 50u);
        EXPECT_EQ(c.members.back() - c.members.front() + 1, c.members.size());
        EXPECT_LT(c.members.back(), 500u);
    }
    EXPECT_EQ(window_categories(500, 40, 5, 50, 3)[7].members, w[7].members);
    const auto p = partition_categories(100, 30);
    ASSERT_EQ(p.size(), 3u);
    EXPECT_EQ(p[2].members.front(), 60u);
    EXPECT_EQ(partition_categories(100, 30, 2).size(), 2u);
    EXPECT_THROW(partition_categories(10, 10), InputError);
}
