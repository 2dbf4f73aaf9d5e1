#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace catsafe {

/// One row per test x alpha (x grid point for power studies).
struct TestSummaryRow {
    std::string test;
    double alpha = 0.0;
    std::optional<double> grid;
    std::size_t n_pvalues = 0;
    std::size_t rejections = 0; // p <= alpha
    double realized = 0.0;
    double ratio = 0.0;        // realized / alpha
    double fwer = 0.0;         // replicates with any p < alpha / L
    double min_p = 1.0;
};

/// Observed U_W across replicates for one category.
struct CategoryMoment {
    std::string category;
    std::size_t m_c = 0;
    double theta0 = 0.0;
    std::size_t replicates = 0;
    double mean = 0.0;
    double se = 0.0;
};

struct CorrMapRow {
    std::string local;
    double rho_x = 0.0;
    double median = 0.0;
    double q05 = 0.0;
    double q95 = 0.0;
};

struct CorrMapFit {
    std::string local;
    double slope = 0.0;
    double intercept = 0.0;
};

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

/// One-sample Kolmogorov-Smirnov test against Uniform(0, 1) with the
/// asymptotic Kolmogorov distribution.
KsResult ks_uniform(std::span<const double> values);

struct StudyReport {
    std::string study; // calibration, power, corr-map
    std::string scenario;
    std::string config_text;
    std::vector<TestSummaryRow> rows;
    /// Pooled p-values per test (first grid point for power studies).
    std::map<std::string, std::vector<double>> pooled;
    std::vector<CategoryMoment> moments;
    std::vector<CorrMapRow> corr_rows;
    std::vector<CorrMapFit> corr_fits;

    const TestSummaryRow* find(const std::string& test, double alpha, std::optional<double> grid = {}) const;

    /// "#catsafe-report v1" then a header line and one row per summary row
    /// (or per correlation-map point).
    void write_csv(std::ostream& out) const;
    void write_json(std::ostream& out) const;
    /// Two-column ECDF of the pooled p-values at fixed evaluation points.
    void write_ecdf(std::ostream& out, const std::string& test) const;
    void write_moments(std::ostream& out) const;
    /// report.csv, summary.json, ecdf_<test>.csv and moments.csv under dir.
    void write_all(const std::filesystem::path& dir) const;
};

/// Evaluation points of the ECDF tables: 1e-4 to 1, ten per decade.
std::vector<double> ecdf_points();

} // namespace catsafe
