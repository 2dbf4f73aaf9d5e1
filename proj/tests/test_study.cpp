#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "catsafe/report.hpp"
#include "catsafe/rng.hpp"
#include "catsafe/study.hpp"

using namespace catsafe;

namespace {

StudyConfig parse_text(const std::string& text) {
    std::istringstream in(text);
    return StudyConfig::parse(in);
}

StudyConfig small_class1() {
    return parse_text("version=1\nscenario=class1\nm=200\nn=12\nblock_size=10\nblock_rho=0.3\n"
                      "categories=10\nmin_category=5\nmax_category=30\n"
                      "tests=class1-wilcoxon,array-perm-wilcoxon,boot-t-avgdiff\n"
                      "nrep=4\nB=50\nB_boot=20\nB_quantile=100\nalphas=0.1,0.05\nseed=7\nthreads=1\n");
}

} // namespace

TEST(StudyConfig, ParsesAndRoundTrips) {
    const auto c = small_class1();
    EXPECT_EQ(c.m, 200u);
    EXPECT_EQ(c.tests.size(), 3u);
    EXPECT_EQ(c.tests[1].name(), "array-perm-wilcoxon");
    EXPECT_EQ(c.tests[2].method, TestMethod::BootT);
    const auto again = parse_text(c.to_text());
    EXPECT_EQ(again.to_text(), c.to_text());
    EXPECT_NO_THROW(c.validate());
}

TEST(StudyConfig, FractionsAndComments) {
    const auto c = parse_text("# strata\nversion=1\nscenario=class3\nlayout=partition\nstrata_deltas=0,3\n"
                              "strata_proportions=2/3,1/3\n");
    EXPECT_NEAR(c.strata.proportions[0], 2.0 / 3.0, 1e-15);
    EXPECT_EQ(c.scenario, Scenario::Class3Null);
}

TEST(StudyConfig, Errors) {
    EXPECT_THROW(parse_text("m=10\n"), InputError);
    EXPECT_THROW(parse_text("version=2\n"), InputError);
    EXPECT_THROW(parse_text("version=1\nbogus=3\n"), ParseError);
    EXPECT_THROW(parse_text("version=1\nm=ten\n"), ParseError);
    try {
        parse_text("version=1\n\nnot a pair\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
    auto c = small_class1();
    c.set("tests", "boot-t-fisher");
    try {
        c.validate();
        FAIL();
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find("null center"), std::string::npos);
    }
    c = small_class1();
    c.set("local", "cox-wald");
    EXPECT_THROW(c.validate(), InputError);
    c = small_class1();
    c.set("tests", "boot-q-wilcoxon");
    c.set("alphas", "0.001");
    c.set("B_quantile", "100");
    EXPECT_THROW(c.validate(), InputError);
    c = small_class1();
    c.set("alphas", "1.5");
    EXPECT_THROW(c.validate(), InputError);
}

TEST(CalibrationStudy, SmallRunIsDeterministic) {
    const auto c = small_class1();
    const auto a = run_calibration_study(c);
    auto c4 = c;
    c4.threads = 4;
    const auto b = run_calibration_study(c4);
    std::ostringstream sa, sb;
    a.write_csv(sa);
    b.write_csv(sb);
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_EQ(a.rows.size(), 6u);
    const auto* row = a.find("array-perm-wilcoxon", 0.1);
    ASSERT_NE(row, nullptr);
    EXPECT_EQ(row->n_pvalues, 40u);
    EXPECT_NEAR(row->ratio, row->realized / 0.1, 1e-12);
    for (const auto& [test, p] : a.pooled) {
        EXPECT_EQ(p.size(), 40u);
        for (double v : p) {
            EXPECT_GT(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
    // Permutation p-values live on the (1 + k) / (B + 1) lattice.
    for (double v : a.pooled.at("array-perm-wilcoxon")) EXPECT_NEAR(v * 51, std::round(v * 51), 1e-9);
}

TEST(PowerStudy, ZeroShiftMatchesCalibration) {
    auto c = small_class1();
    c.tests = {TestId::parse("array-perm-avgdiff")};
    c.test_categories = 10;
    c.set("layout", "partition");
    c.set("category_size", "20");
    c.set("grid", "0,1.5");
    const auto power = run_power_study(c);
    const auto cal = run_calibration_study(c);
    const auto* p0 = power.find("array-perm-avgdiff", 0.05, 0.0);
    const auto* p1 = power.find("array-perm-avgdiff", 0.05, 1.5);
    const auto* n0 = cal.find("array-perm-avgdiff", 0.05);
    ASSERT_TRUE(p0 && p1 && n0);
    EXPECT_EQ(p0->rejections, n0->rejections);
    EXPECT_GE(p1->realized, p0->realized);
}

TEST(CorrelationMap, LogFoldChangeTracksGeneCorrelation) {
    auto c = parse_text("version=1\nscenario=corr-map\nn=20\npairs=200\nsims=20\nrho_grid=-0.8,-0.4,0,0.4,0.8\n"
                        "corr_locals=log-fold-change,anova-f\nseed=3\nthreads=1\n");
    const auto r = run_correlation_map(c);
    ASSERT_EQ(r.corr_fits.size(), 2u);
    EXPECT_NEAR(r.corr_fits[0].slope, 1.0, 0.02);
    EXPECT_NEAR(r.corr_fits[0].intercept, 0.0, 0.02);
    // F depends on the sign of the association only through its square.
    std::vector<double> f;
    for (const auto& row : r.corr_rows) {
        if (row.local == "anova-f") f.push_back(row.median);
    }
    ASSERT_EQ(f.size(), 5u);
    EXPECT_NEAR(f[0], f[4], 0.1);
    EXPECT_NEAR(f[1], f[3], 0.1);
    EXPECT_GT(f[0], f[2]);
    for (const auto& row : r.corr_rows) {
        EXPECT_LE(row.q05, row.median);
        EXPECT_LE(row.median, row.q95);
    }
}

TEST(KsUniform, AcceptsUniformAndRejectsSkew) {
    CounterRng rng(stream_key(12));
    std::vector<double> u(5000), s(5000);
    for (std::size_t k = 0; k < u.size(); ++k) {
        u[k] = rng.uniform();
        s[k] = u[k] * u[k];
    }
    EXPECT_GT(ks_uniform(u).p_value, 0.001);
    EXPECT_LT(ks_uniform(s).p_value, 1e-10);
    const std::vector<double> one{0.5};
    EXPECT_NEAR(ks_uniform(one).statistic, 0.5, 1e-15);
}

TEST(Report, EcdfPointsAndWriters) {
    const auto pts = ecdf_points();
    EXPECT_EQ(pts.front(), 1e-4);
    EXPECT_EQ(pts.back(), 1.0);
    EXPECT_TRUE(std::is_sorted(pts.begin(), pts.end()));

    StudyReport r;
    r.study = "calibration";
    r.rows.push_back({"class1-wilcoxon", 0.05, std::nullopt, 100, 20, 0.2, 4.0, 0.3, 1e-3});
    r.pooled["class1-wilcoxon"] = {0.01, 0.2, 0.5, 0.9};
    std::ostringstream csv, ecdf, json;
    r.write_csv(csv);
    r.write_ecdf(ecdf, "class1-wilcoxon");
    r.write_json(json);
    EXPECT_EQ(csv.str().rfind("#catsafe-report v1\n", 0), 0u);
    EXPECT_NE(csv.str().find("class1-wilcoxon"), std::string::npos);
    EXPECT_NE(ecdf.str().find("0.01,0.25"), std::string::npos);
    EXPECT_NE(json.str().find("\"ks\""), std::string::npos);

    const auto dir = std::filesystem::temp_directory_path() / "catsafe_report_test";
    std::filesystem::remove_all(dir);
    r.write_all(dir);
    EXPECT_TRUE(std::filesystem::exists(dir / "report.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "summary.json"));
    EXPECT_TRUE(std::filesystem::exists(dir / "ecdf_class1-wilcoxon.csv"));
    std::filesystem::remove_all(dir);
}
