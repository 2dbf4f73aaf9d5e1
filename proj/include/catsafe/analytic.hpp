#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "catsafe/types.hpp"

namespace catsafe {

/// Average pairwise correlations within a category, within its complement,
/// and across the cut.
struct CorrelationSummary {
    std::optional<double> rho_c; // absent when m_c < 2
    double rho_cbar = 0.0;       // 0 when m_cbar < 2
    double rho_cross = 0.0;
    std::size_t m_c = 0;
    std::size_t m_cbar = 0;

    std::size_t m() const noexcept { return m_c + m_cbar; }
};

CorrelationSummary correlation_summary(const Eigen::MatrixXd& corr, std::span<const std::size_t> members);
/// Uses sample correlations of the expression rows across arrays.
CorrelationSummary correlation_summary(const ExpressionMatrix& matrix, std::span<const std::size_t> members);

struct VarianceInflation {
    double exact = 1.0;  // true Var[mean_C - mean_Cbar] over its i.i.d. value
    double approx = 1.0; // 1 + (m_C - 1) rho_C
};

VarianceInflation var_inflation_avgdiff(const CorrelationSummary& summary);

/// P(Z1 <= x, Z2 <= y) for a standard bivariate normal with correlation rho,
/// |rho| < 1. Infinite limits are accepted.
double bvn_cdf(double x, double y, double rho);

struct WilcoxonVarOptions {
    double max_terms = 1e6; // quadruple-sum terms allowed without force
    bool force = false;
    std::size_t threads = 1;
};

/// Var[U_W] for jointly normal local statistics with unit variances, means
/// delta and correlation matrix corr: the sum over i, i' in C and h, h' in the
/// complement of Cov(I{T_i > T_h}, I{T_i' > T_h'}).
double wilcoxon_var_correlated(std::span<const double> delta, const Eigen::MatrixXd& corr,
                               std::span<const std::size_t> members, const WilcoxonVarOptions& options = {});

/// Equal-means special case: (1 / 2pi) times the sum of arcsines.
double wilcoxon_var_equal_means(const Eigen::MatrixXd& corr, std::span<const std::size_t> members,
                                const WilcoxonVarOptions& options = {});

/// f(x, y) = Phi2(x, y; rho) - Phi(x) Phi(y).
double lemma_b2_f(double x, double y, double rho);

struct GridSpec {
    double lo = -4.0;
    double hi = 4.0;
    double step = 0.05;
};

struct GridScan {
    double rho = 0.0;
    double max_value = 0.0, max_x = 0.0, max_y = 0.0;
    double min_value = 0.0, min_x = 0.0, min_y = 0.0;
    double max_abs = 0.0;
    double f_origin = 0.0;      // evaluated f(0, 0)
    double closed_form = 0.0;   // asin(rho) / (2 pi)
    std::size_t points = 0;

    /// Maximum for rho > 0, minimum for rho < 0.
    double extremum_x() const noexcept { return rho < 0 ? min_x : max_x; }
    double extremum_y() const noexcept { return rho < 0 ? min_y : max_y; }
    double extremum_value() const noexcept { return rho < 0 ? min_value : max_value; }
};

/// Scans f over grid^2. Grid points within half a step of 0 are snapped to 0.
GridScan lemma_b2_scan(double rho, const GridSpec& grid = {});

/// Every within-category and within-complement correlation is at least every
/// cross correlation.
bool is_correlation_dominant(const Eigen::MatrixXd& corr, std::span<const std::size_t> members);

/// Block correlation: rho_within inside C and inside the complement,
/// rho_cross between them.
Eigen::MatrixXd two_block_correlation(std::size_t m, std::size_t m_c, double rho_within, double rho_cross);

struct Theorem2Config {
    std::size_t m = 12;
    std::size_t m_c = 4;
    double rho_within = 0.4;
    double rho_cross = 0.0;
    std::vector<double> ds{0.5, 1.0, 2.0};
    double margin = 1e-9;
};

struct Theorem2Case {
    double d = 0.0;
    std::size_t de_in_c = 0;    // genes at delta = d inside C
    std::size_t de_in_cbar = 0; // and in the complement
    double variance = 0.0;
    double margin = 0.0;        // equal-delta variance minus this one
};

struct Theorem2Report {
    bool correlation_dominant = false;
    double equal_variance = 0.0;
    std::vector<Theorem2Case> cases;
    bool passed = false;
};

/// Compares Var[U_W] at equal means against two-strata mean profiles with
/// the same proportion of shifted genes in C and its complement.
Theorem2Report theorem2_check(const Theorem2Config& config = {});

} // namespace catsafe
