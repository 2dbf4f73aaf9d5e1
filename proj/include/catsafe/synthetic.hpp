#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "catsafe/types.hpp"

namespace catsafe {

struct CorrelationBlock {
    std::size_t size = 1;
    double rho = 0.0;
};

/// Genes are laid out block by block; genes past the last block are
/// independent singletons. Every pair in different blocks has cross_rho.
struct SyntheticDesign {
    std::size_t m = 2000;
    std::size_t n = 40;
    std::size_t n1 = 20;
    std::size_t n2 = 20;
    std::vector<CorrelationBlock> blocks;
    double cross_rho = 0.0;
    std::vector<double> gene_sd; // empty means unit variances

    /// m genes in consecutive blocks of block_size at rho (last block may be shorter).
    static SyntheticDesign uniform_blocks(std::size_t m, std::size_t n, std::size_t block_size, double rho);

    Eigen::MatrixXd correlation() const;
    /// Block index of every gene (singletons get their own index).
    std::vector<std::size_t> block_of_gene() const;
    /// Throws InputError on inconsistent sizes or a non-PSD correlation.
    void validate() const;
};

/// n i.i.d. multivariate normal columns; column j draws from stream (seed, j).
ExpressionMatrix synth_matrix(const SyntheticDesign& design, std::uint64_t seed);

/// Balanced two-group labels, uniform over all C(n, n/2) labelings.
Response randomize_response(std::size_t n, std::uint64_t seed);

/// Survival response with exponential event and censoring times (rate 1
/// each); redrawn until at least one event occurs.
Response random_survival_response(std::size_t n, std::uint64_t seed);

/// Standardizes each listed row to zero mean and unit sample variance, then
/// adds d * sqrt(1/n1 + 1/n2) on group-1 arrays.
ExpressionMatrix inject_de(const ExpressionMatrix& matrix, const Response& response,
                           std::span<const std::size_t> genes, double d);

/// Per-gene version: rows with delta[i] != 0 are standardized and shifted by
/// delta[i] * sqrt(1/n1 + 1/n2); other rows are untouched.
ExpressionMatrix inject_profile(const ExpressionMatrix& matrix, const Response& response,
                                std::span<const double> delta);

/// K strata of association parameters with proportions summing to 1.
struct StrataSpec {
    std::vector<double> deltas{0.0};
    std::vector<double> proportions{1.0};

    std::size_t K() const noexcept { return deltas.size(); }
    void validate() const;
    /// Largest-remainder stratum counts for a group of the given size.
    std::vector<std::size_t> counts(std::size_t size) const;
    /// Whether proportion * size is an integer for every stratum.
    bool exact_for(std::size_t size) const;
};

/// Stratum label per gene. Each category, and the genes outside all
/// categories, receive their own largest-remainder counts interleaved
/// deterministically, so disjoint categories and their complements share
/// strata proportions exactly when the counts are exact.
std::vector<std::size_t> assign_strata(const StrataSpec& spec, const CategoryCollection& disjoint_categories,
                                       std::size_t m);

std::vector<double> strata_deltas(const StrataSpec& spec, std::span<const std::size_t> labels);

/// Categories made of contiguous gene windows at random offsets, so they
/// inherit the block correlation. Sizes are log-uniform in [min_size, max_size].
CategoryCollection window_categories(std::size_t m, std::size_t count, std::size_t min_size, std::size_t max_size,
                                     std::uint64_t seed);

/// Disjoint contiguous categories of the given size, as many as fit (at most
/// max_count when nonzero).
CategoryCollection partition_categories(std::size_t m, std::size_t size, std::size_t max_count = 0);

} // namespace catsafe
