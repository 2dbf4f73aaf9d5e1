#include "catsafe/multiplicity.hpp"

#include <algorithm>

#include "catsafe/types.hpp"

namespace catsafe {

namespace {

void check_p(double p) {
    if (!(p > 0.0 && p <= 1.0)) {
        throw InputError("p-values must lie in (0, 1]");
    }
}

} // namespace

MultiplicityReport bonferroni(std::span<const double> p, double alpha) {
    if (p.empty()) {
        throw InputError("Bonferroni adjustment needs at least one p-value");
    }
    MultiplicityReport r;
    r.L = p.size();
    r.alpha = alpha;
    r.adjusted_p.reserve(p.size());
    const double L = static_cast<double>(p.size());
    for (double v : p) {
        check_p(v);
        const double adj = std::min(1.0, L * v);
        r.adjusted_p.push_back(adj);
        r.n_significant += adj <= alpha;
    }
    return r;
}

double fwer_estimate(std::span<const std::vector<double>> p_matrix, double alpha) {
    if (p_matrix.empty()) {
        throw InputError("FWER estimate needs at least one replicate");
    }
    std::size_t hits = 0;
    for (const auto& row : p_matrix) {
        if (row.empty()) {
            throw InputError("every replicate needs at least one p-value");
        }
        const double cut = alpha / static_cast<double>(row.size());
        bool any = false;
        for (double v : row) {
            check_p(v);
            any = any || v < cut;
        }
        hits += any;
    }
    return static_cast<double>(hits) / static_cast<double>(p_matrix.size());
}

} // namespace catsafe
