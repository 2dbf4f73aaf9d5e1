#include "catsafe/global_stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace catsafe {

std::string_view to_string(GlobalKind kind) {
    switch (kind) {
    case GlobalKind::FisherCount: return "fisher";
    case GlobalKind::PearsonDiffProp: return "pearson";
    case GlobalKind::AvgDiff: return "avgdiff";
    case GlobalKind::WilcoxonRankSum: return "wilcoxon";
    }
    return "?";
}

GlobalKind parse_global_kind(std::string_view text) {
    if (text == "fisher") return GlobalKind::FisherCount;
    if (text == "pearson") return GlobalKind::PearsonDiffProp;
    if (text == "avgdiff") return GlobalKind::AvgDiff;
    if (text == "wilcoxon") return GlobalKind::WilcoxonRankSum;
    throw InputError("unknown global statistic '" + std::string(text) + "' (fisher, pearson, avgdiff, wilcoxon)");
}

void GlobalStatSpec::validate(std::size_t m) const {
    if (categorical()) {
        if (!region) {
            throw InputError(std::string(to_string(kind)) + " needs a rejection region (e.g. upper:1.66 or top:100)");
        }
        region->validate(m);
    } else if (region) {
        throw InputError(std::string(to_string(kind)) + " does not use a rejection region");
    }
}

std::vector<double> oriented_scores(const LocalStatVector& t) {
    std::vector<double> s = t.values;
    if (!t.higher_is_more_de) {
        for (auto& v : s) v = -v;
    }
    return s;
}

std::vector<double> midranks(std::span<const double> values, std::vector<std::size_t>* tie_sizes) {
    const std::size_t m = values.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return values[a] < values[b] || (values[a] == values[b] && a < b);
    });
    std::vector<double> ranks(m);
    if (tie_sizes) tie_sizes->clear();
    for (std::size_t k = 0; k < m;) {
        std::size_t e = k + 1;
        while (e < m && values[order[e]] == values[order[k]]) ++e;
        const double r = 0.5 * static_cast<double>(k + 1 + e);
        for (std::size_t q = k; q < e; ++q) ranks[order[q]] = r;
        if (tie_sizes && e - k > 1) tie_sizes->push_back(e - k);
        k = e;
    }
    return ranks;
}

std::vector<unsigned char> region_indicators(std::span<const double> scores, const RejectionRegion& region) {
    const std::size_t m = scores.size();
    std::vector<unsigned char> ind(m, 0);
    switch (region.kind) {
    case RejectionRegion::Kind::UpperTail:
        for (std::size_t i = 0; i < m; ++i) ind[i] = scores[i] > region.threshold;
        break;
    case RejectionRegion::Kind::TwoSided:
        for (std::size_t i = 0; i < m; ++i) ind[i] = std::abs(scores[i]) > region.threshold;
        break;
    case RejectionRegion::Kind::TopR: {
        std::vector<std::size_t> order(m);
        std::iota(order.begin(), order.end(), std::size_t{0});
        const std::size_t r = std::min(region.count, m);
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(r), order.end(),
                          [&](std::size_t a, std::size_t b) {
                              return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
                          });
        for (std::size_t k = 0; k < r; ++k) ind[order[k]] = 1;
        break;
    }
    }
    return ind;
}

GlobalStatEvaluator::GlobalStatEvaluator(std::span<const double> scores, const GlobalStatSpec& spec)
    : spec_(spec), m_(scores.size()) {
    spec_.validate(m_);
    switch (spec_.kind) {
    case GlobalKind::FisherCount:
    case GlobalKind::PearsonDiffProp: {
        const auto ind = region_indicators(scores, *spec_.region);
        contrib_.assign(ind.begin(), ind.end());
        rejected_ = static_cast<std::size_t>(std::count(ind.begin(), ind.end(), 1));
        break;
    }
    case GlobalKind::AvgDiff: {
        contrib_.assign(scores.begin(), scores.end());
        grand_mean_ = std::accumulate(contrib_.begin(), contrib_.end(), 0.0) / static_cast<double>(m_);
        for (double v : contrib_) {
            const double d = v - grand_mean_;
            total_ss_ += d * d;
        }
        // Center once so category sums do not lose precision.
        for (auto& v : contrib_) v -= grand_mean_;
        break;
    }
    case GlobalKind::WilcoxonRankSum: {
        if (spec_.rank_absolute) {
            std::vector<double> a(scores.begin(), scores.end());
            for (auto& v : a) v = std::abs(v);
            ranks_ = midranks(a, &tie_sizes_);
        } else {
            ranks_ = midranks(scores, &tie_sizes_);
        }
        contrib_ = ranks_;
        break;
    }
    }
}

GlobalStatValue GlobalStatEvaluator::evaluate(std::span<const std::size_t> members) const {
    const std::size_t mc = members.size();
    if (mc < 1 || mc >= m_) {
        throw InputError("category size must lie in [1, m-1]");
    }
    GlobalStatValue out;
    auto& aux = out.aux;
    aux.m = m_;
    aux.m_c = mc;
    aux.tie_groups = tie_sizes_.size();
    aux.data_dependent_region = spec_.region && spec_.region->kind == RejectionRegion::Kind::TopR;
    double sum = 0.0;
    for (auto i : members) sum += contrib_[i];
    const double n_c = static_cast<double>(mc);
    const double n_cbar = static_cast<double>(m_ - mc);

    switch (spec_.kind) {
    case GlobalKind::FisherCount: {
        aux.rejected = rejected_;
        aux.rejected_in_c = static_cast<std::size_t>(std::lround(sum));
        aux.pi_c = sum / n_c;
        aux.pi_cbar = (static_cast<double>(rejected_) - sum) / n_cbar;
        aux.degenerate = rejected_ == 0;
        out.u = sum;
        break;
    }
    case GlobalKind::PearsonDiffProp: {
        aux.rejected = rejected_;
        aux.rejected_in_c = static_cast<std::size_t>(std::lround(sum));
        aux.pi_c = sum / n_c;
        aux.pi_cbar = (static_cast<double>(rejected_) - sum) / n_cbar;
        double var;
        if (spec_.unpooled_pearson) {
            var = aux.pi_c * (1.0 - aux.pi_c) / n_c + aux.pi_cbar * (1.0 - aux.pi_cbar) / n_cbar;
        } else {
            const double pi = static_cast<double>(rejected_) / static_cast<double>(m_);
            var = pi * (1.0 - pi) * (1.0 / n_c + 1.0 / n_cbar);
        }
        aux.scale = std::sqrt(var);
        if (aux.scale > 0.0) {
            out.u = (aux.pi_c - aux.pi_cbar) / aux.scale;
        } else {
            aux.degenerate = true;
        }
        break;
    }
    case GlobalKind::AvgDiff: {
        // contrib_ is centered, so the complement sums to -sum.
        aux.mean_c = grand_mean_ + sum / n_c;
        aux.mean_cbar = grand_mean_ - sum / n_cbar;
        const double dc = sum / n_c, dcbar = -sum / n_cbar;
        const double within = total_ss_ - n_c * dc * dc - n_cbar * dcbar * dcbar;
        const double s2 = std::max(0.0, within) / (static_cast<double>(m_) - 2.0);
        aux.scale = std::sqrt(s2 * (1.0 / n_c + 1.0 / n_cbar));
        if (aux.scale > 1e-300 && within > 1e-14 * total_ss_) {
            out.u = (dc - dcbar) / aux.scale;
        } else {
            aux.degenerate = true;
        }
        break;
    }
    case GlobalKind::WilcoxonRankSum:
        out.u = sum;
        break;
    }
    return out;
}

GlobalStatValue compute_global(const LocalStatVector& t, std::span<const std::size_t> members,
                               const GlobalStatSpec& spec) {
    const auto scores = oriented_scores(t);
    return GlobalStatEvaluator(scores, spec).evaluate(members);
}

} // namespace catsafe
