#include "catsafe/class1.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "catsafe/numeric.hpp"
#include "catsafe/rng.hpp"

namespace catsafe {

std::string_view to_string(Class1Method method) {
    switch (method) {
    case Class1Method::FisherExact: return "fisher-exact";
    case Class1Method::PearsonZ: return "pearson-z";
    case Class1Method::AvgDiffT: return "avgdiff-t";
    case Class1Method::WilcoxonExact: return "wilcoxon-exact";
    case Class1Method::WilcoxonNormal: return "wilcoxon-normal";
    case Class1Method::GenePermutation: return "gene-permutation";
    }
    return "?";
}

Class1Tester::Class1Tester(std::span<const double> scores, const GlobalStatSpec& spec, const Class1Options& options,
                           std::size_t max_category_size)
    : evaluator_(scores, spec), options_(options) {
    const std::size_t m = scores.size();
    if (spec.kind == GlobalKind::WilcoxonRankSum) {
        const bool exact = options.wilcoxon == WilcoxonMode::Exact ||
                           (options.wilcoxon == WilcoxonMode::Auto && m <= options.exact_limit);
        if (exact) {
            const std::size_t cap = max_category_size == 0 ? m - 1 : max_category_size;
            exact_ = std::make_unique<WilcoxonExactDistribution>(evaluator_.ranks(), cap);
        }
    }
}

Class1Result Class1Tester::test(std::string_view name, std::span<const std::size_t> members) const {
    const auto value = evaluator_.evaluate(members);
    Class1Result r;
    r.category = std::string(name);
    r.u_obs = value.u;
    r.aux = value.aux;
    const bool upper = options_.tail == Tail::Upper;
    const std::size_t m = evaluator_.genes(), mc = members.size();
    switch (evaluator_.spec().kind) {
    case GlobalKind::FisherCount: {
        r.method = Class1Method::FisherExact;
        const std::size_t k = value.aux.rejected_in_c, R = value.aux.rejected;
        if (R == 0) {
            r.degenerate = true;
            r.p = 1.0;
        } else {
            r.p = upper ? hypergeometric_sf(m, mc, R, k) : 1.0 - hypergeometric_sf(m, mc, R, k + 1);
        }
        break;
    }
    case GlobalKind::PearsonDiffProp:
        r.method = Class1Method::PearsonZ;
        r.degenerate = value.aux.degenerate;
        r.p = r.degenerate ? 1.0 : (upper ? normal_sf(value.u) : normal_cdf(value.u));
        break;
    case GlobalKind::AvgDiff: {
        r.method = Class1Method::AvgDiffT;
        r.degenerate = value.aux.degenerate;
        const double df = static_cast<double>(m) - 2.0;
        r.p = r.degenerate ? 1.0 : (upper ? student_t_sf(value.u, df) : student_t_sf(-value.u, df));
        break;
    }
    case GlobalKind::WilcoxonRankSum: {
        if (exact_ && mc <= exact_->max_size()) {
            r.method = Class1Method::WilcoxonExact;
            r.p = upper ? exact_->upper_tail(mc, value.u) : exact_->lower_tail(mc, value.u);
        } else {
            r.method = Class1Method::WilcoxonNormal;
            const auto moments = rank_sum_moments(m, mc, evaluator_.tie_sizes());
            if (!(moments.variance > 0.0)) {
                r.degenerate = true;
                r.p = 1.0;
                break;
            }
            const double cc = options_.continuity ? 0.5 : 0.0;
            const double sd = std::sqrt(moments.variance);
            r.p = upper ? normal_sf((value.u - moments.mean - cc) / sd) : normal_cdf((value.u - moments.mean + cc) / sd);
        }
        break;
    }
    }
    r.p = std::clamp(r.p, std::numeric_limits<double>::min(), 1.0);
    return r;
}

Class1Result class1_test(const LocalStatVector& t, const Category& category, const GlobalStatSpec& spec,
                         const Class1Options& options) {
    const auto scores = oriented_scores(t);
    return Class1Tester(scores, spec, options, category.members.size()).test(category.name, category.members);
}

Class1Result gene_permutation_test(const GlobalStatEvaluator& evaluator, std::string_view name,
                                   std::span<const std::size_t> members, const GenePermutationOptions& options) {
    const auto observed = evaluator.evaluate(members);
    Class1Result r;
    r.category = std::string(name);
    r.u_obs = observed.u;
    r.aux = observed.aux;
    r.method = Class1Method::GenePermutation;
    if (evaluator.spec().categorical() && observed.aux.rejected == 0) {
        r.degenerate = true;
        r.p = 1.0;
        return r;
    }
    const std::size_t m = evaluator.genes(), mc = members.size();
    const bool upper = options.tail == Tail::Upper;
    auto extreme = [&](double u) { return upper ? at_least(u, observed.u) : at_most(u, observed.u); };

    if (options.exhaustive) {
        const double total = std::exp(log_choose(static_cast<double>(m), static_cast<double>(mc)));
        if (total > options.enumeration_cap * (1.0 + 1e-9)) {
            throw InputError("exhaustive gene permutation would enumerate " + std::to_string(total) +
                             " subsets, above the cap of " + std::to_string(options.enumeration_cap));
        }
        std::vector<std::size_t> subset(mc);
        std::iota(subset.begin(), subset.end(), std::size_t{0});
        std::size_t count = 0, visited = 0;
        while (true) {
            ++visited;
            count += extreme(evaluator.value(subset));
            std::size_t k = mc;
            while (k > 0 && subset[k - 1] == m - mc + k - 1) --k;
            if (k == 0) break;
            ++subset[k - 1];
            for (std::size_t q = k; q < mc; ++q) subset[q] = subset[q - 1] + 1;
        }
        r.permutations = visited;
        r.p = static_cast<double>(count) / static_cast<double>(visited);
        return r;
    }

    if (options.B < 1) {
        throw InputError("gene permutation needs B >= 1");
    }
    const std::uint64_t name_key = fnv1a(name);
    std::size_t count = 0;
    for (std::size_t b = 0; b < options.B; ++b) {
        CounterRng rng(stream_key(options.seed, name_key, b));
        const auto subset = random_subset(m, mc, rng);
        count += extreme(evaluator.value(subset));
    }
    r.permutations = options.B;
    r.p = static_cast<double>(1 + count) / static_cast<double>(options.B + 1);
    return r;
}

Class1Result gene_permutation_test(const LocalStatVector& t, const Category& category, const GlobalStatSpec& spec,
                                   const GenePermutationOptions& options) {
    const auto scores = oriented_scores(t);
    return gene_permutation_test(GlobalStatEvaluator(scores, spec), category.name, category.members, options);
}

} // namespace catsafe
