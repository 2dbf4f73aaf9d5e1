#include <algorithm>
#include <cmath>
#include <numeric>

#include "catsafe/local_stats.hpp"
#include "cox_problem.hpp"

namespace catsafe::detail {

CoxProblem::CoxProblem(std::span<const double> times, std::span<const int> events) {
    const std::size_t n = times.size();
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) { return times[a] > times[b]; });
    events_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        events_[k] = events[order_[k]];
    }
    // Tie groups of equal times, in descending time order.
    std::size_t start = 0;
    for (std::size_t k = 1; k <= n; ++k) {
        if (k == n || times[order_[k]] != times[order_[start]]) {
            group_end_.push_back(k);
            start = k;
        }
    }
}

CoxProblem::Evaluation CoxProblem::evaluate(std::span<const double> centered, double beta) const {
    double shift = 0.0;
    for (double v : centered) {
        shift = std::max(shift, beta * v);
    }
    Evaluation e;
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    std::size_t begin = 0;
    for (std::size_t end : group_end_) {
        double event_x = 0.0;
        std::size_t d = 0;
        for (std::size_t k = begin; k < end; ++k) {
            const double x = centered[order_[k]];
            const double w = std::exp(beta * x - shift);
            s0 += w;
            s1 += w * x;
            s2 += w * x * x;
            if (events_[k] == 1) {
                event_x += x;
                ++d;
            }
        }
        if (d > 0) {
            const double mean = s1 / s0;
            const double dd = static_cast<double>(d);
            e.loglik += beta * event_x - dd * (std::log(s0) + shift);
            e.score += event_x - dd * mean;
            e.information += dd * std::max(0.0, s2 / s0 - mean * mean);
        }
        begin = end;
    }
    return e;
}

CoxFit CoxProblem::fit(std::span<const double> x, std::vector<double>& scratch, const CoxOptions& options) const {
    const std::size_t n = x.size();
    scratch.resize(n);
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    bool constant = true;
    for (std::size_t j = 0; j < n; ++j) {
        scratch[j] = x[j] - mean;
        constant = constant && x[j] == x[0];
    }
    CoxFit fit;
    if (constant) {
        return fit;
    }
    std::span<const double> xc(scratch);
    double beta = 0.0;
    auto current = evaluate(xc, beta);
    if (current.information <= 0.0) {
        // Every risk set is homogeneous in x at its event times.
        return fit;
    }
    for (int iter = 1; iter <= options.max_iterations; ++iter) {
        double step = current.score / current.information;
        auto next = evaluate(xc, beta + step);
        for (int halving = 0; halving < 40 && !(next.loglik >= current.loglik - 1e-12 * std::abs(current.loglik));
             ++halving) {
            step /= 2.0;
            next = evaluate(xc, beta + step);
        }
        beta += step;
        current = next;
        fit.iterations = iter;
        if (std::abs(step) < options.tolerance) {
            if (!(current.information > 0.0)) {
                break;
            }
            fit.beta = beta;
            fit.se = 1.0 / std::sqrt(current.information);
            fit.wald = beta / fit.se;
            return fit;
        }
    }
    throw ConvergenceError("Cox partial likelihood did not converge within " + std::to_string(options.max_iterations) +
                           " Newton-Raphson iterations (beta = " + std::to_string(beta) +
                           "; likelihood may be monotone)");
}

} // namespace catsafe::detail

namespace catsafe {

double cox_log_partial_likelihood(std::span<const double> x, std::span<const double> times,
                                  std::span<const int> events, double beta) {
    detail::CoxProblem problem(times, events);
    return problem.evaluate(x, beta).loglik;
}

CoxFit fit_cox(std::span<const double> x, std::span<const double> times, std::span<const int> events,
               const CoxOptions& options) {
    if (x.size() != times.size() || x.size() != events.size()) {
        throw InputError("Cox fit inputs differ in length");
    }
    detail::CoxProblem problem(times, events);
    std::vector<double> scratch;
    return problem.fit(x, scratch, options);
}

} // namespace catsafe
