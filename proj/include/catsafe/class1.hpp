#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "catsafe/distributions.hpp"
#include "catsafe/global_stats.hpp"

namespace catsafe {

enum class Class1Method { FisherExact, PearsonZ, AvgDiffT, WilcoxonExact, WilcoxonNormal, GenePermutation };

std::string_view to_string(Class1Method method);

enum class WilcoxonMode { Auto, Exact, Normal };

struct Class1Options {
    WilcoxonMode wilcoxon = WilcoxonMode::Auto;
    std::size_t exact_limit = 200; // Auto uses the exact distribution when m <= exact_limit
    bool continuity = false;
    Tail tail = Tail::Upper;
};

struct Class1Result {
    std::string category;
    double u_obs = 0.0;
    double p = 1.0;
    Class1Method method = Class1Method::FisherExact;
    std::size_t permutations = 0; // resamples or enumerated subsets (GenePermutation)
    bool degenerate = false;
    GlobalAux aux;
};

/// Parametric and exact p-values under i.i.d. local statistics, for many
/// categories sharing one vector of oriented scores.
class Class1Tester {
public:
    /// max_category_size bounds the exact rank-sum table; 0 means m - 1.
    Class1Tester(std::span<const double> scores, const GlobalStatSpec& spec, const Class1Options& options = {},
                 std::size_t max_category_size = 0);

    Class1Result test(std::string_view name, std::span<const std::size_t> members) const;

    const GlobalStatEvaluator& evaluator() const noexcept { return evaluator_; }

private:
    GlobalStatEvaluator evaluator_;
    Class1Options options_;
    std::unique_ptr<WilcoxonExactDistribution> exact_;
};

Class1Result class1_test(const LocalStatVector& t, const Category& category, const GlobalStatSpec& spec,
                         const Class1Options& options = {});

struct GenePermutationOptions {
    std::size_t B = 1000;
    std::uint64_t seed = 1;
    bool exhaustive = false;
    double enumeration_cap = 1e6;
    Tail tail = Tail::Upper;
};

/// Sampled: p = (1 + #{u*_b >= u_obs}) / (B + 1) over B uniform m_C-subsets,
/// stream (seed, category name, b). Exhaustive: exact fraction over all
/// C(m, m_C) subsets.
Class1Result gene_permutation_test(const GlobalStatEvaluator& evaluator, std::string_view name,
                                   std::span<const std::size_t> members, const GenePermutationOptions& options);

Class1Result gene_permutation_test(const LocalStatVector& t, const Category& category, const GlobalStatSpec& spec,
                                   const GenePermutationOptions& options);

} // namespace catsafe
