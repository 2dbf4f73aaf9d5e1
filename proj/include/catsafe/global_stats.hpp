#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "catsafe/local_stats.hpp"
#include "catsafe/types.hpp"

namespace catsafe {

enum class GlobalKind { FisherCount, PearsonDiffProp, AvgDiff, WilcoxonRankSum };

/// Upper tests look for more DE in the category; lower for less.
enum class Tail { Upper, Lower };

std::string_view to_string(GlobalKind kind);
/// fisher, pearson, avgdiff, wilcoxon
GlobalKind parse_global_kind(std::string_view text);

struct GlobalStatSpec {
    GlobalKind kind = GlobalKind::WilcoxonRankSum;
    std::optional<RejectionRegion> region; // required for FisherCount and PearsonDiffProp
    bool rank_absolute = false;            // WilcoxonRankSum: rank |t| for two-sided DE
    bool unpooled_pearson = false;         // PearsonDiffProp: unpooled standard error

    bool categorical() const noexcept {
        return kind == GlobalKind::FisherCount || kind == GlobalKind::PearsonDiffProp;
    }
    /// Throws InputError when the region is missing or present without use.
    void validate(std::size_t m) const;
};

struct GlobalAux {
    std::size_t m = 0;
    std::size_t m_c = 0;
    std::size_t rejected = 0;      // R
    std::size_t rejected_in_c = 0; // U_F
    double pi_c = 0.0;
    double pi_cbar = 0.0;
    double mean_c = 0.0;
    double mean_cbar = 0.0;
    double scale = 0.0;          // sigma_P or sigma_D
    std::size_t tie_groups = 0;  // groups of tied local statistics (size > 1)
    bool degenerate = false;
    bool data_dependent_region = false;
};

struct GlobalStatValue {
    double u = 0.0;
    GlobalAux aux;
};

/// Precomputes everything about one vector of oriented scores (larger = more
/// DE) so that each category costs O(m_C).
class GlobalStatEvaluator {
public:
    GlobalStatEvaluator(std::span<const double> scores, const GlobalStatSpec& spec);

    GlobalStatValue evaluate(std::span<const std::size_t> members) const;
    double value(std::span<const std::size_t> members) const { return evaluate(members).u; }

    std::size_t genes() const noexcept { return m_; }
    const GlobalStatSpec& spec() const noexcept { return spec_; }
    std::size_t rejected() const noexcept { return rejected_; }
    /// Midranks (WilcoxonRankSum only).
    const std::vector<double>& ranks() const noexcept { return ranks_; }
    /// Sizes of the tie groups among the ranked values (WilcoxonRankSum only).
    const std::vector<std::size_t>& tie_sizes() const noexcept { return tie_sizes_; }
    /// Per-gene value summed by the statistic: indicator, score, or midrank.
    const std::vector<double>& contributions() const noexcept { return contrib_; }

private:
    GlobalStatSpec spec_;
    std::size_t m_ = 0;
    std::vector<double> contrib_;
    std::vector<double> ranks_;
    std::vector<std::size_t> tie_sizes_;
    std::size_t rejected_ = 0;
    double grand_mean_ = 0.0;
    double total_ss_ = 0.0;
};

/// Scores oriented so that larger means more DE (p-value scales are negated).
std::vector<double> oriented_scores(const LocalStatVector& t);

/// Midranks of values in ascending order, plus the sizes of tie groups.
std::vector<double> midranks(std::span<const double> values, std::vector<std::size_t>* tie_sizes = nullptr);

/// Indicators of T_i in the region; TopR takes the R largest (stable on ties).
std::vector<unsigned char> region_indicators(std::span<const double> scores, const RejectionRegion& region);

GlobalStatValue compute_global(const LocalStatVector& t, std::span<const std::size_t> members,
                               const GlobalStatSpec& spec);

} // namespace catsafe
