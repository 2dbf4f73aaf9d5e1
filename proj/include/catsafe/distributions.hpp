#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace catsafe {

double normal_cdf(double x);
double normal_sf(double x);
double normal_pdf(double x);
double normal_quantile(double p);

/// P(T >= x) for Student's t with df degrees of freedom.
double student_t_sf(double x, double df);
double student_t_quantile(double p, double df);

/// P(X >= k) for X ~ Hypergeometric(population m, m_c successes, r draws).
double hypergeometric_sf(std::size_t m, std::size_t m_c, std::size_t r, std::size_t k);

double log_choose(double n, double k);

/// Exact null distribution of the rank sum of a uniformly random subset of
/// the given midranks, for every subset size up to max_size. Counts are kept
/// over doubled ranks so midranks stay integral.
class WilcoxonExactDistribution {
public:
    WilcoxonExactDistribution(std::span<const double> midranks, std::size_t max_size);

    std::size_t genes() const noexcept { return m_; }
    std::size_t max_size() const noexcept { return max_size_; }

    /// P(U_W >= u) for a subset of the given size.
    double upper_tail(std::size_t size, double u) const;
    /// P(U_W <= u).
    double lower_tail(std::size_t size, double u) const;

private:
    std::size_t m_;
    std::size_t max_size_;
    std::size_t width_;              // number of doubled-sum slots per size
    std::vector<double> counts_;     // (max_size + 1) x width_
    std::vector<double> totals_;     // C(m, size)
};

/// Mean and tie-corrected variance of the rank sum under i.i.d. sampling.
struct RankSumMoments {
    double mean;
    double variance;
};
RankSumMoments rank_sum_moments(std::size_t m, std::size_t m_c, std::span<const std::size_t> tie_sizes);

} // namespace catsafe
