#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "catsafe/types.hpp"

namespace catsafe {

enum class LocalStatTag { PooledT, LogFoldChange, AnovaF, CoxWald, SamT, EmpiricalP };

/// Per-gene measure of differential expression. For two-group statistics the
/// sign convention is group 1 minus group 2.
struct LocalStatKind {
    LocalStatTag tag = LocalStatTag::PooledT;
    double s0 = 0.0; // SamT denominator constant

    static LocalStatKind pooled_t() { return {LocalStatTag::PooledT, 0.0}; }
    static LocalStatKind log_fold_change() { return {LocalStatTag::LogFoldChange, 0.0}; }
    static LocalStatKind anova_f() { return {LocalStatTag::AnovaF, 0.0}; }
    static LocalStatKind cox_wald() { return {LocalStatTag::CoxWald, 0.0}; }
    static LocalStatKind sam_t(double s0) { return {LocalStatTag::SamT, s0}; }

    bool compatible_with(ResponseKind kind) const;

    std::string to_string() const;
    /// pooled-t, log-fold-change, anova-f, cox-wald, sam-t (s0 supplied separately)
    static LocalStatKind parse(std::string_view text, double s0 = 0.0);
};

struct LocalStatVector {
    std::vector<double> values;
    LocalStatKind kind;
    /// False for p-value scales, where small values mean more DE. Global
    /// statistics negate such vectors before ranking or averaging.
    bool higher_is_more_de = true;
};

/// Array-level view of a (possibly resampled) design: position j uses matrix
/// column columns[j] paired with response entry responses[j]. Identity for
/// observed data; permuted responses for array permutation; equal resampled
/// indices for the bootstrap.
struct DesignView {
    std::span<const std::size_t> columns;
    std::span<const std::size_t> responses;
};

/// Computes one LocalStatKind over a fixed matrix and response. Holds no
/// mutable state, so a single engine may be shared by concurrent callers.
class LocalStatEngine {
public:
    LocalStatEngine(const ExpressionMatrix& matrix, const Response& response, LocalStatKind kind);

    const ExpressionMatrix& matrix() const noexcept { return matrix_; }
    const Response& response() const noexcept { return response_; }
    LocalStatKind kind() const noexcept { return kind_; }

    /// Statistics on the observed design.
    LocalStatVector compute() const;

    /// Whether the design supports the statistic: two-group statistics need
    /// min_group_size() arrays per group, survival needs an event.
    bool design_supported(const DesignView& design) const;
    std::size_t min_group_size() const noexcept;

    /// Writes m statistics into out. Throws DegenerateError listing genes whose
    /// statistic is undefined, ConvergenceError for Cox fits that diverge.
    void compute(const DesignView& design, std::span<double> out) const;

private:
    void two_group(const DesignView& design, std::span<double> out) const;
    void anova(const DesignView& design, std::span<double> out) const;
    void cox(const DesignView& design, std::span<double> out) const;

    const ExpressionMatrix& matrix_;
    const Response& response_;
    LocalStatKind kind_;
};

LocalStatVector compute_local(const ExpressionMatrix& matrix, const Response& response, LocalStatKind kind);

enum class Sidedness { Upper, TwoSided };

/// p_i = (1 + #{b : t*_{b,i} >= t_i}) / (B + 1); two-sided compares |t|.
/// `resampled` holds B rows of m statistics.
LocalStatVector to_empirical_p(const LocalStatVector& observed, std::span<const std::vector<double>> resampled,
                               Sidedness sidedness = Sidedness::Upper);

/// Two-column (gene_id, value) audit export.
void write_local_stats(std::ostream& out, const ExpressionMatrix& matrix, const LocalStatVector& stats);

// ---------------------------------------------------------------------------
// Univariate Cox proportional hazards

struct CoxOptions {
    double tolerance = 1e-8;
    int max_iterations = 50;
};

struct CoxFit {
    double beta = 0.0;
    double se = std::numeric_limits<double>::infinity();
    double wald = 0.0;
    int iterations = 0;
};

/// Breslow log partial likelihood of a single covariate.
double cox_log_partial_likelihood(std::span<const double> x, std::span<const double> times,
                                  std::span<const int> events, double beta);

/// Newton-Raphson from beta = 0 with step halving. A covariate carrying no
/// information (e.g. constant) yields beta = 0, wald = 0, se = infinity.
/// Throws ConvergenceError when |delta beta| stays above tolerance, which is
/// what a monotone likelihood (perfect separation) produces.
CoxFit fit_cox(std::span<const double> x, std::span<const double> times, std::span<const int> events,
               const CoxOptions& options = {});

} // namespace catsafe
