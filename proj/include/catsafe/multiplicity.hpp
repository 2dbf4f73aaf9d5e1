#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace catsafe {

struct MultiplicityReport {
    std::size_t L = 0;
    double alpha = 0.05;
    std::vector<double> adjusted_p;
    std::size_t n_significant = 0;
};

/// adjusted = min(1, L p); significant when adjusted <= alpha.
MultiplicityReport bonferroni(std::span<const double> p, double alpha = 0.05);

/// Fraction of replicates (rows of L p-values) with any p < alpha / L.
double fwer_estimate(std::span<const std::vector<double>> p_matrix, double alpha);

} // namespace catsafe
