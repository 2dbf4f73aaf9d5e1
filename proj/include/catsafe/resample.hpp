#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "catsafe/global_stats.hpp"
#include "catsafe/local_stats.hpp"
#include "catsafe/types.hpp"

namespace catsafe {

enum class ResampleMethod { ArrayPermutation, Bootstrap };

std::string_view to_string(ResampleMethod method);

struct ResamplingPlan {
    ResampleMethod method = ResampleMethod::ArrayPermutation;
    std::size_t B = 1000;
    std::uint64_t seed = 1;
    /// Bootstrap only: total redraws of degenerate resamples allowed; 0 means 100 * B.
    std::size_t redraw_limit = 0;
    /// ArrayPermutation only: enumerate all n! orderings (n <= 10) instead of sampling.
    bool exhaustive = false;
    /// Worker count; 0 means default_threads().
    std::size_t threads = 0;

    std::size_t effective_redraw_limit() const noexcept { return redraw_limit == 0 ? 100 * B : redraw_limit; }
};

struct NullDistribution {
    std::string category;
    GlobalStatSpec spec;
    double u_obs = 0.0;
    std::vector<double> u_star;
    ResamplingPlan plan;
    std::size_t redraw_count = 0;
};

/// Null distributions for every (global spec, category) pair from one shared
/// stream of resampled designs. Resample b (attempt a) draws from stream
/// (seed, b, a), so results do not depend on the worker count, on which
/// categories are present, or on their order.
struct NullSet {
    std::vector<GlobalStatSpec> specs;
    std::vector<std::string> categories;
    std::vector<std::size_t> category_sizes;
    std::size_t genes = 0;
    ResamplingPlan plan;
    std::size_t redraw_count = 0;
    std::size_t B = 0;                 // resamples drawn (n! when exhaustive)
    std::vector<double> u_obs;         // [spec * L + category]
    std::vector<double> u_star;        // [(spec * L + category) * B + b]

    std::size_t L() const noexcept { return categories.size(); }
    double observed(std::size_t spec, std::size_t category) const { return u_obs[spec * L() + category]; }
    std::span<const double> resampled(std::size_t spec, std::size_t category) const {
        return {u_star.data() + (spec * L() + category) * B, B};
    }
    NullDistribution extract(std::size_t spec, std::size_t category) const;
};

NullSet build_nulls(const ExpressionMatrix& matrix, const Response& response, const CategoryCollection& categories,
                    LocalStatKind local, std::span<const GlobalStatSpec> specs, const ResamplingPlan& plan);

NullDistribution build_null(const ExpressionMatrix& matrix, const Response& response, const Category& category,
                            LocalStatKind local, const GlobalStatSpec& spec, const ResamplingPlan& plan);

/// B x m resampled local statistics (raw orientation), for to_empirical_p.
std::vector<std::vector<double>> resample_local_stats(const ExpressionMatrix& matrix, const Response& response,
                                                      LocalStatKind local, const ResamplingPlan& plan);

/// (1 + #{u* >= u_obs}) / (B + 1); exhaustive enumeration uses #{u* >= u_obs} / B.
double empirical_pvalue(std::span<const double> u_star, double u_obs, bool exhaustive = false,
                        Tail tail = Tail::Upper);
double empirical_pvalue(const NullDistribution& null, Tail tail = Tail::Upper);

/// Expectation of the global statistic under every stratified null; absent
/// for FisherCount, whose null mean depends on the strata distributions.
std::optional<double> null_center_theta0(GlobalKind kind, std::size_t m, std::size_t m_c);

enum class PivotInterval { Quantile, TInterval };

std::string_view to_string(PivotInterval interval);

struct PivotDiagnostics {
    double mean = 0.0; // u-bar*
    double se = 0.0;   // se*
    std::size_t beyond_theta0 = 0; // quantile count
    std::size_t B = 0;
};

struct CategoryTestResult {
    std::string category;
    std::size_t m_c = 0;
    double u_obs = 0.0;
    double p = 1.0;
    std::optional<double> theta0;
    std::string method;
    PivotDiagnostics diagnostics;
    bool degenerate = false;
};

/// Quantile: p = (1 + #{u* <= theta0}) / (B + 1). TInterval: upper tail of
/// t_{n-1} at (u-bar* - theta0) / se*. Lower tails mirror both.
CategoryTestResult bootstrap_pivot_test(std::span<const double> u_star, double theta0, PivotInterval interval,
                                        std::size_t n_arrays, Tail tail = Tail::Upper);
CategoryTestResult bootstrap_pivot_test(const NullDistribution& null, double theta0, PivotInterval interval,
                                        std::size_t n_arrays, Tail tail = Tail::Upper);

/// Single-column export of u*, preceded by '#' lines echoing the plan.
void write_null_distribution(std::ostream& out, const NullDistribution& null);

} // namespace catsafe
