#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "catsafe/global_stats.hpp"
#include "catsafe/local_stats.hpp"
#include "catsafe/report.hpp"
#include "catsafe/synthetic.hpp"

namespace catsafe {

enum class TestMethod { Class1, GenePerm, ArrayPerm, BootQuantile, BootT };

/// A (method, global statistic) pair named like "array-perm-wilcoxon".
struct TestId {
    TestMethod method = TestMethod::Class1;
    GlobalKind global = GlobalKind::WilcoxonRankSum;

    std::string name() const;
    static TestId parse(std::string_view text);
    bool operator==(const TestId&) const = default;
};

std::string_view to_string(TestMethod method);
TestMethod parse_test_method(std::string_view text);

enum class Scenario { Class1Null, Class3Null, CorrelationMap };
enum class Alternative { Additive, Multiplicative };

/// Flat key=value study configuration (see README for the keys).
struct StudyConfig {
    Scenario scenario = Scenario::Class1Null;

    std::size_t m = 2000;
    std::size_t n = 40;
    std::size_t block_size = 20;
    double block_rho = 0.3;
    double cross_rho = 0.0;
    bool regenerate = false; // fresh synthetic matrix per replicate

    std::string matrix_path; // real-data mode
    std::string gmt_path;
    std::size_t min_size = 5;

    std::string layout = "windows"; // windows | partition
    std::size_t categories = 200;
    std::size_t min_category = 5;
    std::size_t max_category = 100;
    std::size_t category_size = 30; // partition layout
    std::size_t test_categories = 0; // test only the first k categories; 0 tests all

    StrataSpec strata;

    std::vector<TestId> tests;
    LocalStatKind local = LocalStatKind::pooled_t();
    std::optional<RejectionRegion> region; // default: upper tail at t_{n-2, 0.95}

    std::size_t nrep = 500;
    std::size_t B = 500;          // array and gene permutation
    std::size_t B_boot = 200;     // bootstrap t moments
    std::size_t B_quantile = 1000;
    std::vector<double> alphas{0.1, 0.05, 0.01, 0.005, 0.001};
    std::uint64_t seed = 1;
    std::size_t threads = 0;

    Alternative alternative = Alternative::Additive;
    std::vector<double> grid{0.0};

    std::vector<double> rho_grid;
    std::size_t pairs = 100;
    std::size_t sims = 200;
    std::vector<std::string> corr_locals{"log-fold-change", "pooled-t", "anova-f", "cox-wald"};

    bool paper_scale = false;

    static StudyConfig parse(std::istream& in);
    static StudyConfig load(const std::filesystem::path& path);
    /// Applies one key=value assignment; throws InputError on unknown keys.
    void set(std::string_view key, std::string_view value);
    /// Canonical text (parses back to the same configuration).
    std::string to_text() const;
    void validate() const;
    /// Full-size campaign: m = 7299, 1823 categories, nrep = 10000, B = 2000.
    void apply_paper_scale();
};

/// Type I error calibration under the configured null scenario.
StudyReport run_calibration_study(const StudyConfig& config);

/// Rejection rates across the alternative grid. The first test_categories
/// categories (default 4) carry the alternative and are the ones tested.
StudyReport run_power_study(const StudyConfig& config);

/// Correlation of local statistics against the expression correlation of
/// gene pairs, across config.rho_grid.
StudyReport run_correlation_map(const StudyConfig& config);

} // namespace catsafe
