#include "catsafe/local_stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "catsafe/io.hpp"
#include "catsafe/numeric.hpp"
#include "cox_problem.hpp"

namespace catsafe {

bool LocalStatKind::compatible_with(ResponseKind kind) const {
    switch (tag) {
    case LocalStatTag::PooledT:
    case LocalStatTag::LogFoldChange:
    case LocalStatTag::SamT: return kind == ResponseKind::TwoGroup;
    case LocalStatTag::AnovaF: return kind == ResponseKind::TwoGroup || kind == ResponseKind::MultiGroup;
    case LocalStatTag::CoxWald: return kind == ResponseKind::Survival;
    case LocalStatTag::EmpiricalP: return false;
    }
    return false;
}

std::string LocalStatKind::to_string() const {
    switch (tag) {
    case LocalStatTag::PooledT: return "pooled-t";
    case LocalStatTag::LogFoldChange: return "log-fold-change";
    case LocalStatTag::AnovaF: return "anova-f";
    case LocalStatTag::CoxWald: return "cox-wald";
    case LocalStatTag::SamT: return "sam-t(s0=" + format_double(s0) + ")";
    case LocalStatTag::EmpiricalP: return "empirical-p";
    }
    return "?";
}

LocalStatKind LocalStatKind::parse(std::string_view text, double s0) {
    if (text == "pooled-t") return pooled_t();
    if (text == "log-fold-change") return log_fold_change();
    if (text == "anova-f") return anova_f();
    if (text == "cox-wald") return cox_wald();
    if (text == "sam-t") {
        if (!(s0 >= 0.0)) throw InputError("SAM s0 must be nonnegative");
        return sam_t(s0);
    }
    throw InputError("unknown local statistic '" + std::string(text) + "'");
}

LocalStatEngine::LocalStatEngine(const ExpressionMatrix& matrix, const Response& response, LocalStatKind kind)
    : matrix_(matrix), response_(response), kind_(kind) {
    if (!kind.compatible_with(response.kind())) {
        throw InputError("local statistic " + kind.to_string() + " is incompatible with a " +
                         std::string(catsafe::to_string(response.kind())) + " response");
    }
    if (response.size() != matrix.arrays()) {
        throw InputError("response covers " + std::to_string(response.size()) + " arrays but the matrix has " +
                         std::to_string(matrix.arrays()));
    }
    std::vector<std::size_t> identity(matrix.arrays());
    std::iota(identity.begin(), identity.end(), std::size_t{0});
    if (!design_supported({identity, identity})) {
        throw InputError("observed design does not support " + kind.to_string() + " (needs at least " +
                         std::to_string(min_group_size()) + " arrays per group, or an event for survival)");
    }
}

std::size_t LocalStatEngine::min_group_size() const noexcept {
    switch (kind_.tag) {
    case LocalStatTag::PooledT:
    case LocalStatTag::SamT: return 2;
    default: return 1;
    }
}

bool LocalStatEngine::design_supported(const DesignView& design) const {
    const std::size_t n = design.responses.size();
    if (response_.kind() == ResponseKind::Survival) {
        const auto& events = response_.events();
        return std::any_of(design.responses.begin(), design.responses.end(),
                           [&](std::size_t r) { return events[r] == 1; });
    }
    const std::size_t k = response_.groups();
    std::vector<std::size_t> counts(k + 1, 0);
    for (auto r : design.responses) {
        ++counts[static_cast<std::size_t>(response_.labels()[r])];
    }
    for (std::size_t g = 1; g <= k; ++g) {
        if (counts[g] < min_group_size()) {
            return false;
        }
    }
    if (kind_.tag == LocalStatTag::AnovaF && n <= k) {
        return false;
    }
    return true;
}

LocalStatVector LocalStatEngine::compute() const {
    std::vector<std::size_t> identity(matrix_.arrays());
    std::iota(identity.begin(), identity.end(), std::size_t{0});
    LocalStatVector out{std::vector<double>(matrix_.genes()), kind_, true};
    compute({identity, identity}, out.values);
    return out;
}

void LocalStatEngine::compute(const DesignView& design, std::span<double> out) const {
    if (out.size() != matrix_.genes() || design.columns.size() != design.responses.size()) {
        throw Error("local statistic buffers have inconsistent sizes");
    }
    switch (kind_.tag) {
    case LocalStatTag::PooledT:
    case LocalStatTag::SamT:
    case LocalStatTag::LogFoldChange: two_group(design, out); break;
    case LocalStatTag::AnovaF: anova(design, out); break;
    case LocalStatTag::CoxWald: cox(design, out); break;
    case LocalStatTag::EmpiricalP: throw Error("empirical p-values are derived with to_empirical_p");
    }
}

namespace {

[[noreturn]] void throw_degenerate(const ExpressionMatrix& matrix, std::vector<std::size_t> genes) {
    std::string msg = "zero within-group variance with a nonzero mean difference for " +
                      std::to_string(genes.size()) + " gene(s):";
    for (std::size_t k = 0; k < std::min<std::size_t>(genes.size(), 10); ++k) {
        msg += " " + matrix.gene_ids()[genes[k]];
    }
    if (genes.size() > 10) {
        msg += " ...";
    }
    throw DegenerateError(msg, std::move(genes));
}

} // namespace

void LocalStatEngine::two_group(const DesignView& design, std::span<double> out) const {
    const std::size_t n = design.columns.size();
    const auto& labels = response_.labels();
    std::vector<unsigned char> in_first(n);
    double n1 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        in_first[j] = labels[design.responses[j]] == 1;
        n1 += in_first[j];
    }
    const double n2 = static_cast<double>(n) - n1;
    const double se_scale = std::sqrt(1.0 / n1 + 1.0 / n2);
    const double df = static_cast<double>(n) - 2.0;
    std::vector<std::size_t> degenerate;

    for (std::size_t i = 0; i < matrix_.genes(); ++i) {
        const auto row = matrix_.row(i);
        double sum[2] = {0.0, 0.0};
        double first[2] = {0.0, 0.0};
        bool seen[2] = {false, false};
        bool constant[2] = {true, true};
        for (std::size_t j = 0; j < n; ++j) {
            const double x = row[design.columns[j]];
            const int g = in_first[j] ? 0 : 1;
            sum[g] += x;
            if (!seen[g]) {
                first[g] = x;
                seen[g] = true;
            } else if (x != first[g]) {
                constant[g] = false;
            }
        }
        const double mean1 = sum[0] / n1, mean2 = sum[1] / n2;
        if (kind_.tag == LocalStatTag::LogFoldChange) {
            out[i] = mean1 - mean2;
            continue;
        }
        if (constant[0] && constant[1]) {
            const double diff = first[0] - first[1];
            if (kind_.tag == LocalStatTag::SamT && kind_.s0 > 0.0) {
                out[i] = diff / kind_.s0;
            } else if (diff == 0.0) {
                out[i] = 0.0;
            } else {
                out[i] = 0.0;
                degenerate.push_back(i);
            }
            continue;
        }
        double ss = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = row[design.columns[j]] - (in_first[j] ? mean1 : mean2);
            ss += d * d;
        }
        const double se = std::sqrt(ss / df) * se_scale;
        out[i] = (mean1 - mean2) / (se + (kind_.tag == LocalStatTag::SamT ? kind_.s0 : 0.0));
    }
    if (!degenerate.empty()) {
        throw_degenerate(matrix_, std::move(degenerate));
    }
}

void LocalStatEngine::anova(const DesignView& design, std::span<double> out) const {
    const std::size_t n = design.columns.size();
    const std::size_t k = response_.groups();
    const auto& labels = response_.labels();
    std::vector<std::size_t> group(n);
    std::vector<double> count(k, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        group[j] = static_cast<std::size_t>(labels[design.responses[j]] - 1);
        count[group[j]] += 1.0;
    }
    std::vector<double> sum(k), first(k);
    std::vector<unsigned char> seen(k), constant(k);
    std::vector<std::size_t> degenerate;
    const double df_between = static_cast<double>(k) - 1.0;
    const double df_within = static_cast<double>(n - k);

    for (std::size_t i = 0; i < matrix_.genes(); ++i) {
        const auto row = matrix_.row(i);
        std::fill(sum.begin(), sum.end(), 0.0);
        std::fill(seen.begin(), seen.end(), 0);
        std::fill(constant.begin(), constant.end(), 1);
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double x = row[design.columns[j]];
            const auto g = group[j];
            sum[g] += x;
            total += x;
            if (!seen[g]) {
                first[g] = x;
                seen[g] = 1;
            } else if (x != first[g]) {
                constant[g] = 0;
            }
        }
        const bool all_constant = std::all_of(constant.begin(), constant.end(), [](auto c) { return c != 0; });
        if (all_constant) {
            const bool equal = std::all_of(first.begin(), first.end(), [&](double v) { return v == first[0]; });
            out[i] = 0.0;
            if (!equal) {
                degenerate.push_back(i);
            }
            continue;
        }
        const double grand = total / static_cast<double>(n);
        double ssb = 0.0;
        for (std::size_t g = 0; g < k; ++g) {
            const double d = sum[g] / count[g] - grand;
            ssb += count[g] * d * d;
        }
        double ssw = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double d = row[design.columns[j]] - sum[group[j]] / count[group[j]];
            ssw += d * d;
        }
        out[i] = (ssb / df_between) / (ssw / df_within);
    }
    if (!degenerate.empty()) {
        throw_degenerate(matrix_, std::move(degenerate));
    }
}

void LocalStatEngine::cox(const DesignView& design, std::span<double> out) const {
    const std::size_t n = design.columns.size();
    std::vector<double> times(n);
    std::vector<int> events(n);
    for (std::size_t j = 0; j < n; ++j) {
        times[j] = response_.times()[design.responses[j]];
        events[j] = response_.events()[design.responses[j]];
    }
    detail::CoxProblem problem(times, events);
    std::vector<double> x(n), scratch;
    for (std::size_t i = 0; i < matrix_.genes(); ++i) {
        const auto row = matrix_.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            x[j] = row[design.columns[j]];
        }
        try {
            out[i] = problem.fit(x, scratch, {}).wald;
        } catch (const ConvergenceError& e) {
            throw ConvergenceError("gene " + matrix_.gene_ids()[i] + ": " + e.what());
        }
    }
}

LocalStatVector compute_local(const ExpressionMatrix& matrix, const Response& response, LocalStatKind kind) {
    return LocalStatEngine(matrix, response, kind).compute();
}

LocalStatVector to_empirical_p(const LocalStatVector& observed, std::span<const std::vector<double>> resampled,
                               Sidedness sidedness) {
    const std::size_t B = resampled.size();
    if (B == 0) {
        throw InputError("empirical p-values need at least one resample");
    }
    const std::size_t m = observed.values.size();
    std::vector<std::size_t> exceed(m, 0);
    for (const auto& row : resampled) {
        if (row.size() != m) {
            throw InputError("resampled local statistics have the wrong length");
        }
        for (std::size_t i = 0; i < m; ++i) {
            const double t = observed.values[i];
            const bool hit = sidedness == Sidedness::Upper ? at_least(row[i], t) : at_least(std::abs(row[i]), std::abs(t));
            exceed[i] += hit;
        }
    }
    LocalStatVector out{std::vector<double>(m), {LocalStatTag::EmpiricalP, 0.0}, false};
    for (std::size_t i = 0; i < m; ++i) {
        out.values[i] = static_cast<double>(1 + exceed[i]) / static_cast<double>(B + 1);
    }
    return out;
}

void write_local_stats(std::ostream& out, const ExpressionMatrix& matrix, const LocalStatVector& stats) {
    out << "gene_id\t" << stats.kind.to_string() << '\n';
    for (std::size_t i = 0; i < stats.values.size(); ++i) {
        out << matrix.gene_ids()[i] << '\t' << format_double(stats.values[i]) << '\n';
    }
}

} // namespace catsafe
