#include "catsafe/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "catsafe/types.hpp"

namespace catsafe {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -std::numeric_limits<double>::infinity();
        if (p == 1.0) return std::numeric_limits<double>::infinity();
        throw InputError("normal quantile needs p in [0, 1]");
    }
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double student_t_sf(double x, double df) {
    if (std::isinf(x)) return x > 0 ? 0.0 : 1.0;
    return boost::math::cdf(boost::math::complement(boost::math::students_t_distribution<double>(df), x));
}

double student_t_quantile(double p, double df) {
    return boost::math::quantile(boost::math::students_t_distribution<double>(df), p);
}

double log_choose(double n, double k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double hypergeometric_sf(std::size_t m, std::size_t m_c, std::size_t r, std::size_t k) {
    if (m_c > m || r > m) {
        throw InputError("hypergeometric parameters out of range");
    }
    const std::size_t lo = r + m_c > m ? r + m_c - m : 0;
    const std::size_t hi = std::min(r, m_c);
    if (k <= lo) return 1.0;
    if (k > hi) return 0.0;
    // pmf at k, then the term ratio upward.
    const double md = static_cast<double>(m), cd = static_cast<double>(m_c), rd = static_cast<double>(r);
    auto log_pmf = [&](double x) {
        return log_choose(cd, x) + log_choose(md - cd, rd - x) - log_choose(md, rd);
    };
    double term = std::exp(log_pmf(static_cast<double>(k)));
    double sum = term;
    for (std::size_t x = k; x < hi; ++x) {
        const double xd = static_cast<double>(x);
        term *= (cd - xd) * (rd - xd) / ((xd + 1.0) * (md - cd - rd + xd + 1.0));
        sum += term;
    }
    return std::min(1.0, sum);
}

WilcoxonExactDistribution::WilcoxonExactDistribution(std::span<const double> midranks, std::size_t max_size)
    : m_(midranks.size()), max_size_(std::min(max_size, midranks.size())) {
    std::vector<std::size_t> doubled(m_);
    std::size_t total = 0;
    for (std::size_t i = 0; i < m_; ++i) {
        doubled[i] = static_cast<std::size_t>(std::lround(2.0 * midranks[i]));
        total += doubled[i];
    }
    std::sort(doubled.begin(), doubled.end());
    width_ = total + 1;
    counts_.assign((max_size_ + 1) * width_, 0.0);
    counts_[0] = 1.0;
    std::size_t reach = 0; // largest reachable doubled sum so far
    for (std::size_t i = 0; i < m_; ++i) {
        const std::size_t v = doubled[i];
        reach += v;
        for (std::size_t j = std::min(i + 1, max_size_); j >= 1; --j) {
            double* dst = &counts_[j * width_];
            const double* src = &counts_[(j - 1) * width_];
            for (std::size_t s = reach; s >= v; --s) {
                dst[s] += src[s - v];
                if (s == v) break;
            }
        }
    }
    totals_.resize(max_size_ + 1);
    for (std::size_t j = 0; j <= max_size_; ++j) {
        double t = 0.0;
        for (std::size_t s = 0; s < width_; ++s) t += counts_[j * width_ + s];
        totals_[j] = t;
    }
}

double WilcoxonExactDistribution::upper_tail(std::size_t size, double u) const {
    if (size > max_size_) {
        throw InputError("exact rank-sum distribution was built for smaller categories");
    }
    const double target = std::ceil(2.0 * u - 1e-7);
    if (target <= 0.0) return 1.0;
    if (target >= static_cast<double>(width_)) return 0.0;
    double hits = 0.0;
    for (std::size_t s = static_cast<std::size_t>(target); s < width_; ++s) hits += counts_[size * width_ + s];
    return hits / totals_[size];
}

double WilcoxonExactDistribution::lower_tail(std::size_t size, double u) const {
    if (size > max_size_) {
        throw InputError("exact rank-sum distribution was built for smaller categories");
    }
    const double target = std::floor(2.0 * u + 1e-7);
    if (target < 0.0) return 0.0;
    const std::size_t top = std::min<std::size_t>(static_cast<std::size_t>(target), width_ - 1);
    double hits = 0.0;
    for (std::size_t s = 0; s <= top; ++s) hits += counts_[size * width_ + s];
    return hits / totals_[size];
}

RankSumMoments rank_sum_moments(std::size_t m, std::size_t m_c, std::span<const std::size_t> tie_sizes) {
    const double md = static_cast<double>(m), cd = static_cast<double>(m_c), cbar = md - cd;
    double tie = 0.0;
    for (auto t : tie_sizes) {
        const double td = static_cast<double>(t);
        tie += td * td * td - td;
    }
    return {cd * (md + 1.0) / 2.0, cd * cbar / 12.0 * ((md + 1.0) - tie / (md * (md - 1.0)))};
}

} // namespace catsafe
