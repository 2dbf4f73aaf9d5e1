#pragma once

#include <span>
#include <vector>

#include "catsafe/local_stats.hpp"

namespace catsafe::detail {

// Risk-set structure for one (times, events) design, reused across genes.
class CoxProblem {
public:
    CoxProblem(std::span<const double> times, std::span<const int> events);

    struct Evaluation {
        double loglik = 0.0;
        double score = 0.0;
        double information = 0.0;
    };

    // Breslow log partial likelihood, score and information at beta.
    Evaluation evaluate(std::span<const double> x, double beta) const;

    CoxFit fit(std::span<const double> x, std::vector<double>& scratch, const CoxOptions& options) const;

private:
    std::vector<std::size_t> order_; // positions by descending time
    std::vector<int> events_;        // events in that order
    std::vector<std::size_t> group_end_;
};

} // namespace catsafe::detail
