#include "catsafe/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "catsafe/rng.hpp"

namespace catsafe {

SyntheticDesign SyntheticDesign::uniform_blocks(std::size_t m, std::size_t n, std::size_t block_size, double rho) {
    SyntheticDesign d;
    d.m = m;
    d.n = n;
    d.n1 = n / 2;
    d.n2 = n - n / 2;
    if (block_size > 1) {
        for (std::size_t start = 0; start < m; start += block_size) {
            d.blocks.push_back({std::min(block_size, m - start), rho});
        }
    }
    return d;
}

std::vector<std::size_t> SyntheticDesign::block_of_gene() const {
    std::vector<std::size_t> out(m);
    std::size_t gene = 0, index = 0;
    for (const auto& b : blocks) {
        for (std::size_t k = 0; k < b.size && gene < m; ++k) out[gene++] = index;
        ++index;
    }
    while (gene < m) out[gene++] = index++;
    return out;
}

Eigen::MatrixXd SyntheticDesign::correlation() const {
    const auto M = static_cast<Eigen::Index>(m);
    Eigen::MatrixXd r = Eigen::MatrixXd::Constant(M, M, cross_rho);
    Eigen::Index start = 0;
    for (const auto& b : blocks) {
        const auto s = static_cast<Eigen::Index>(b.size);
        r.block(start, start, s, s).setConstant(b.rho);
        start += s;
    }
    r.diagonal().setOnes();
    return r;
}

namespace {

bool factor_model(const SyntheticDesign& d) {
    if (d.cross_rho < 0.0) return false;
    return std::all_of(d.blocks.begin(), d.blocks.end(),
                       [&](const CorrelationBlock& b) { return b.rho >= d.cross_rho && b.rho <= 1.0; });
}

} // namespace

void SyntheticDesign::validate() const {
    if (m < 2 || n < 2) throw InputError("synthetic design needs m >= 2 and n >= 2");
    if (n1 + n2 != n || n1 == 0 || n2 == 0) throw InputError("group sizes must be positive and sum to n");
    std::size_t total = 0;
    for (const auto& b : blocks) {
        if (b.size == 0) throw InputError("correlation blocks must be nonempty");
        if (!(b.rho >= -1.0 && b.rho <= 1.0)) throw InputError("block correlation must lie in [-1, 1]");
        total += b.size;
    }
    if (total > m) throw InputError("correlation blocks cover more than m genes");
    if (!(cross_rho >= -1.0 && cross_rho <= 1.0)) throw InputError("cross correlation must lie in [-1, 1]");
    if (!gene_sd.empty()) {
        if (gene_sd.size() != m) throw InputError("gene_sd must list one value per gene");
        for (double s : gene_sd) {
            if (!(s > 0.0) || !std::isfinite(s)) throw InputError("gene standard deviations must be positive");
        }
    }
    if (!factor_model(*this)) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(correlation(), Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() < -1e-10) {
            throw InputError("synthetic correlation structure is not positive semi-definite");
        }
    }
}

ExpressionMatrix synth_matrix(const SyntheticDesign& design, std::uint64_t seed) {
    design.validate();
    const std::size_t m = design.m, n = design.n;
    std::vector<double> values(m * n);
    auto sd = [&](std::size_t i) { return design.gene_sd.empty() ? 1.0 : design.gene_sd[i]; };

    if (factor_model(design)) {
        const auto block = design.block_of_gene();
        const std::size_t n_blocks = m == 0 ? 0 : block.back() + 1;
        std::vector<double> load_shared(n_blocks, 0.0), load_own(n_blocks, std::sqrt(1.0 - design.cross_rho));
        for (std::size_t b = 0; b < design.blocks.size(); ++b) {
            load_shared[b] = std::sqrt(design.blocks[b].rho - design.cross_rho);
            load_own[b] = std::sqrt(1.0 - design.blocks[b].rho);
        }
        const double load_global = std::sqrt(design.cross_rho);
        std::vector<double> factor(n_blocks);
        for (std::size_t j = 0; j < n; ++j) {
            CounterRng rng(stream_key(seed, j));
            const double g = rng.normal();
            for (auto& f : factor) f = rng.normal();
            for (std::size_t i = 0; i < m; ++i) {
                const std::size_t b = block[i];
                values[i * n + j] = sd(i) * (load_global * g + load_shared[b] * factor[b] + load_own[b] * rng.normal());
            }
        }
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(design.correlation());
        const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        const Eigen::MatrixXd L = es.eigenvectors() * root.asDiagonal();
        Eigen::VectorXd z(static_cast<Eigen::Index>(m));
        for (std::size_t j = 0; j < n; ++j) {
            CounterRng rng(stream_key(seed, j));
            for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
            const Eigen::VectorXd x = L * z;
            for (std::size_t i = 0; i < m; ++i) values[i * n + j] = sd(i) * x[static_cast<Eigen::Index>(i)];
        }
    }
    std::vector<std::string> genes(m), arrays(n);
    for (std::size_t i = 0; i < m; ++i) genes[i] = "g" + std::to_string(i + 1);
    for (std::size_t j = 0; j < n; ++j) arrays[j] = "a" + std::to_string(j + 1);
    return ExpressionMatrix(std::move(genes), std::move(arrays), std::move(values));
}

Response randomize_response(std::size_t n, std::uint64_t seed) {
    if (n < 2 || n % 2 != 0) {
        throw InputError("balanced randomization needs an even number of arrays, got " + std::to_string(n));
    }
    CounterRng rng(stream_key(seed));
    const auto first = random_subset(n, n / 2, rng);
    std::vector<int> labels(n, 2);
    for (auto j : first) labels[j] = 1;
    return Response::two_group(std::move(labels));
}

Response random_survival_response(std::size_t n, std::uint64_t seed) {
    for (std::uint64_t attempt = 0;; ++attempt) {
        CounterRng rng(stream_key(seed, attempt));
        std::vector<double> times(n);
        std::vector<int> events(n);
        bool any = false;
        for (std::size_t j = 0; j < n; ++j) {
            const double event_time = rng.exponential(1.0);
            const double censor_time = rng.exponential(1.0);
            times[j] = std::min(event_time, censor_time);
            events[j] = event_time <= censor_time;
            any = any || events[j] == 1;
        }
        if (any) {
            return Response::survival(std::move(times), std::move(events));
        }
    }
}

namespace {

double shift_scale(const Response& response) {
    if (response.kind() != ResponseKind::TwoGroup) {
        throw InputError("DE injection needs a two-group response");
    }
    const double n1 = static_cast<double>(response.group_size(1));
    const double n2 = static_cast<double>(response.group_size(2));
    return std::sqrt(1.0 / n1 + 1.0 / n2);
}

void standardize_and_shift(std::span<double> row, const std::vector<int>& labels, double shift,
                           const std::string& gene) {
    const double n = static_cast<double>(row.size());
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= n;
    double ss = 0.0;
    for (double v : row) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    if (!(sd > 0.0)) {
        throw InputError("gene " + gene + " has zero variance and cannot be standardized");
    }
    for (std::size_t j = 0; j < row.size(); ++j) {
        row[j] = (row[j] - mean) / sd + (labels[j] == 1 ? shift : 0.0);
    }
}

} // namespace

ExpressionMatrix inject_de(const ExpressionMatrix& matrix, const Response& response,
                           std::span<const std::size_t> genes, double d) {
    const double scale = shift_scale(response);
    if (response.size() != matrix.arrays()) throw InputError("response and matrix disagree on n");
    std::vector<double> values = matrix.values();
    const std::size_t n = matrix.arrays();
    for (auto i : genes) {
        if (i >= matrix.genes()) throw InputError("DE gene index out of range");
        standardize_and_shift({values.data() + i * n, n}, response.labels(), d * scale, matrix.gene_ids()[i]);
    }
    return ExpressionMatrix(matrix.gene_ids(), matrix.array_ids(), std::move(values));
}

ExpressionMatrix inject_profile(const ExpressionMatrix& matrix, const Response& response,
                                std::span<const double> delta) {
    const double scale = shift_scale(response);
    if (delta.size() != matrix.genes()) throw InputError("one association parameter per gene is required");
    if (response.size() != matrix.arrays()) throw InputError("response and matrix disagree on n");
    std::vector<double> values = matrix.values();
    const std::size_t n = matrix.arrays();
    for (std::size_t i = 0; i < matrix.genes(); ++i) {
        if (delta[i] != 0.0) {
            standardize_and_shift({values.data() + i * n, n}, response.labels(), delta[i] * scale,
                                  matrix.gene_ids()[i]);
        }
    }
    return ExpressionMatrix(matrix.gene_ids(), matrix.array_ids(), std::move(values));
}

void StrataSpec::validate() const {
    if (deltas.empty() || deltas.size() != proportions.size()) {
        throw InputError("strata need one proportion per association parameter");
    }
    double total = 0.0;
    for (double b : proportions) {
        if (!(b >= 0.0)) throw InputError("strata proportions must be nonnegative");
        total += b;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InputError("strata proportions must sum to 1");
}

std::vector<std::size_t> StrataSpec::counts(std::size_t size) const {
    const std::size_t K = deltas.size();
    std::vector<std::size_t> c(K);
    std::vector<std::pair<double, std::size_t>> rem(K);
    std::size_t used = 0;
    for (std::size_t k = 0; k < K; ++k) {
        const double exact = proportions[k] * static_cast<double>(size);
        c[k] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        used += c[k];
        rem[k] = {exact - static_cast<double>(c[k]), k};
    }
    std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t q = 0; used < size; ++q, ++used) ++c[rem[q % K].second];
    return c;
}

bool StrataSpec::exact_for(std::size_t size) const {
    for (double b : proportions) {
        const double v = b * static_cast<double>(size);
        if (std::abs(v - std::round(v)) > 1e-9) return false;
    }
    return true;
}

namespace {

void interleave(const StrataSpec& spec, std::span<const std::size_t> genes, std::vector<std::size_t>& labels) {
    const std::size_t s = genes.size(), K = spec.K();
    const auto target = spec.counts(s);
    std::vector<std::size_t> used(K, 0);
    for (std::size_t p = 0; p < s; ++p) {
        std::size_t best = K;
        double best_gap = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            if (used[k] >= target[k]) continue;
            const double gap = static_cast<double>(target[k]) * static_cast<double>(p + 1) / static_cast<double>(s) -
                               static_cast<double>(used[k]);
            if (best == K || gap > best_gap + 1e-12) {
                best = k;
                best_gap = gap;
            }
        }
        labels[genes[p]] = best;
        ++used[best];
    }
}

} // namespace

std::vector<std::size_t> assign_strata(const StrataSpec& spec, const CategoryCollection& disjoint_categories,
                                       std::size_t m) {
    spec.validate();
    std::vector<std::size_t> labels(m, spec.K());
    for (const auto& c : disjoint_categories) {
        for (auto i : c.members) {
            if (i >= m) throw InputError("category member index out of range");
            if (labels[i] != spec.K()) throw InputError("strata assignment needs disjoint categories");
            labels[i] = 0;
        }
        interleave(spec, c.members, labels);
    }
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < m; ++i) {
        if (labels[i] == spec.K()) rest.push_back(i);
    }
    if (!rest.empty()) interleave(spec, rest, labels);
    return labels;
}

std::vector<double> strata_deltas(const StrataSpec& spec, std::span<const std::size_t> labels) {
    std::vector<double> d(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) d[i] = spec.deltas.at(labels[i]);
    return d;
}

CategoryCollection window_categories(std::size_t m, std::size_t count, std::size_t min_size, std::size_t max_size,
                                     std::uint64_t seed) {
    if (min_size < 1 || max_size < min_size || max_size >= m) {
        throw InputError("window categories need 1 <= min_size <= max_size < m");
    }
    CategoryCollection out;
    out.reserve(count);
    const double lo = std::log(static_cast<double>(min_size)), hi = std::log(static_cast<double>(max_size) + 1.0);
    for (std::size_t k = 0; k < count; ++k) {
        CounterRng rng(stream_key(seed, k));
        std::size_t size = static_cast<std::size_t>(std::floor(std::exp(lo + (hi - lo) * rng.uniform())));
        size = std::clamp(size, min_size, max_size);
        const std::size_t start = rng.below(m - size + 1);
        Category c;
        c.name = "WIN" + std::to_string(k + 1);
        c.description = "genes " + std::to_string(start + 1) + "-" + std::to_string(start + size);
        c.members.resize(size);
        std::iota(c.members.begin(), c.members.end(), start);
        out.push_back(std::move(c));
    }
    return out;
}

CategoryCollection partition_categories(std::size_t m, std::size_t size, std::size_t max_count) {
    if (size < 1 || size >= m) throw InputError("partition categories need 1 <= size < m");
    CategoryCollection out;
    for (std::size_t start = 0; start + size <= m && (max_count == 0 || out.size() < max_count); start += size) {
        Category c;
        c.name = "PART" + std::to_string(out.size() + 1);
        c.description = "genes " + std::to_string(start + 1) + "-" + std::to_string(start + size);
        c.members.resize(size);
        std::iota(c.members.begin(), c.members.end(), start);
        out.push_back(std::move(c));
    }
    return out;
}

} // namespace catsafe
