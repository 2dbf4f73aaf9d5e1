#include "catsafe/analytic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "catsafe/distributions.hpp"
#include "catsafe/numeric.hpp"
#include "catsafe/parallel.hpp"

namespace catsafe {

namespace {

std::vector<unsigned char> membership(std::span<const std::size_t> members, std::size_t m) {
    std::vector<unsigned char> in(m, 0);
    for (auto i : members) {
        if (i >= m) throw InputError("category member index out of range");
        if (in[i]) throw InputError("category members must be unique");
        in[i] = 1;
    }
    if (members.empty() || members.size() >= m) {
        throw InputError("category size must lie in [1, m-1]");
    }
    return in;
}

CorrelationSummary finish_summary(double within_c, double within_cbar, double cross, std::size_t mc, std::size_t mcbar) {
    CorrelationSummary s;
    s.m_c = mc;
    s.m_cbar = mcbar;
    const double c = static_cast<double>(mc), cb = static_cast<double>(mcbar);
    if (mc >= 2) s.rho_c = within_c / (c * (c - 1.0));
    if (mcbar >= 2) s.rho_cbar = within_cbar / (cb * (cb - 1.0));
    s.rho_cross = cross / (c * cb);
    return s;
}

// 32-point Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
    static constexpr std::size_t N = 32;
    std::array<double, N> x{};
    std::array<double, N> w{};

    GaussLegendre() {
        for (std::size_t i = 0; i < N; ++i) {
            double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(N) + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = z;
                for (std::size_t k = 2; k <= N; ++k) {
                    const double kd = static_cast<double>(k);
                    const double p2 = ((2.0 * kd - 1.0) * z * p1 - (kd - 1.0) * p0) / kd;
                    p0 = p1;
                    p1 = p2;
                }
                dp = static_cast<double>(N) * (z * p1 - p0) / (z * z - 1.0);
                const double dz = p1 / dp;
                z -= dz;
                if (std::abs(dz) < 1e-16) break;
            }
            x[i] = z;
            w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        }
    }
};

const GaussLegendre& gauss_legendre() {
    static const GaussLegendre rule;
    return rule;
}

// P(X > h, Y > k) for correlation r (Genz's formulation of the
// Drezner-Wesolowsky integrals).
double bvn_upper(double h, double k, double r) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const auto& gl = gauss_legendre();
    const double hk = h * k;
    double bvn = 0.0;
    if (std::abs(r) < 0.925) {
        const double hs = (h * h + k * k) / 2.0;
        const double asr = std::asin(r) / 2.0;
        for (std::size_t i = 0; i < GaussLegendre::N; ++i) {
            const double sn = std::sin(asr * (1.0 + gl.x[i]));
            bvn += gl.w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
        }
        bvn = bvn * asr / two_pi + normal_cdf(-h) * normal_cdf(-k);
    } else {
        double kk = k, hkk = hk;
        if (r < 0.0) {
            kk = -k;
            hkk = -hk;
        }
        if (std::abs(r) < 1.0) {
            const double as = 1.0 - r * r;
            double a = std::sqrt(as);
            const double bs = (h - kk) * (h - kk);
            const double c = (4.0 - hkk) / 8.0;
            const double d = (12.0 - hkk) / 80.0;
            double asr = -(bs / as + hkk) / 2.0;
            if (asr > -100.0) {
                bvn = a * std::exp(asr) * (1.0 - c * (bs - as) * (1.0 - d * bs) / 3.0 + c * d * as * as);
            }
            if (hkk > -100.0) {
                const double b = std::sqrt(bs);
                const double sp = std::sqrt(two_pi) * normal_cdf(-b / a);
                bvn -= std::exp(-hkk / 2.0) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
            }
            a /= 2.0;
            double sum = 0.0;
            for (std::size_t i = 0; i < GaussLegendre::N; ++i) {
                const double xs = std::pow(a * (1.0 + gl.x[i]), 2);
                const double asr_i = -(bs / xs + hkk) / 2.0;
                if (asr_i > -100.0) {
                    const double sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
                    const double rs = std::sqrt(1.0 - xs);
                    const double ep = std::exp(-(hkk / 2.0) * xs / ((1.0 + rs) * (1.0 + rs))) / rs;
                    sum += gl.w[i] * std::exp(asr_i) * (sp - ep);
                }
            }
            bvn = (a * sum - bvn) / two_pi;
        }
        if (r > 0.0) {
            bvn += normal_cdf(-std::max(h, kk));
        } else if (h >= kk) {
            bvn = -bvn;
        } else {
            const double lower = h < 0.0 ? normal_cdf(kk) - normal_cdf(h) : normal_cdf(-h) - normal_cdf(-kk);
            bvn = lower - bvn;
        }
    }
    return std::clamp(bvn, 0.0, 1.0);
}

// Phi2 including the degenerate |r| = 1 limits.
double bvn_cdf_closed(double x, double y, double r) {
    if (r >= 1.0) return normal_cdf(std::min(x, y));
    if (r <= -1.0) return std::max(0.0, normal_cdf(x) + normal_cdf(y) - 1.0);
    return bvn_cdf(x, y, r);
}

} // namespace

CorrelationSummary correlation_summary(const Eigen::MatrixXd& corr, std::span<const std::size_t> members) {
    const std::size_t m = static_cast<std::size_t>(corr.rows());
    if (corr.cols() != corr.rows()) throw InputError("correlation matrix must be square");
    const auto in = membership(members, m);
    double wc = 0.0, wcb = 0.0, cross = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            if (i == j) continue;
            const double r = corr(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (in[i] && in[j]) {
                wc += r;
            } else if (!in[i] && !in[j]) {
                wcb += r;
            } else if (in[i]) {
                cross += r;
            }
        }
    }
    return finish_summary(wc, wcb, cross, members.size(), m - members.size());
}

CorrelationSummary correlation_summary(const ExpressionMatrix& matrix, std::span<const std::size_t> members) {
    const std::size_t m = matrix.genes(), n = matrix.arrays();
    const auto in = membership(members, m);
    // r_{i,i'} = z_i . z_i' for rows standardized to zero mean and unit norm,
    // so pair sums reduce to norms of the summed rows.
    Eigen::VectorXd sum_c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    Eigen::VectorXd sum_cbar = sum_c;
    Eigen::VectorXd z(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < m; ++i) {
        const auto row = matrix.row(i);
        double mean = 0.0;
        for (double v : row) mean += v;
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            z[static_cast<Eigen::Index>(j)] = row[j] - mean;
            ss += (row[j] - mean) * (row[j] - mean);
        }
        if (!(ss > 0.0)) {
            throw InputError("gene " + matrix.gene_ids()[i] + " is constant; its correlations are undefined");
        }
        z /= std::sqrt(ss);
        (in[i] ? sum_c : sum_cbar) += z;
    }
    const double mc = static_cast<double>(members.size()), mcb = static_cast<double>(m - members.size());
    return finish_summary(sum_c.squaredNorm() - mc, sum_cbar.squaredNorm() - mcb, sum_c.dot(sum_cbar),
                          members.size(), m - members.size());
}

VarianceInflation var_inflation_avgdiff(const CorrelationSummary& s) {
    const double mc = static_cast<double>(s.m_c), mcb = static_cast<double>(s.m_cbar), m = mc + mcb;
    const double rho_c = s.rho_c.value_or(0.0);
    VarianceInflation v;
    // The cross term enters twice: once per direction of Cov(mean_C, mean_Cbar).
    v.exact = 1.0 + mcb * (mc - 1.0) / m * rho_c + mc * (mcb - 1.0) / m * s.rho_cbar - 2.0 * mc * mcb / m * s.rho_cross;
    v.approx = 1.0 + (mc - 1.0) * rho_c;
    return v;
}

double bvn_cdf(double x, double y, double rho) {
    if (!(std::abs(rho) < 1.0)) {
        throw InputError("bivariate normal correlation must lie strictly inside (-1, 1)");
    }
    if (std::isnan(x) || std::isnan(y)) throw InputError("bivariate normal limits must not be NaN");
    if (x == -std::numeric_limits<double>::infinity() || y == -std::numeric_limits<double>::infinity()) return 0.0;
    if (x == std::numeric_limits<double>::infinity()) return normal_cdf(y);
    if (y == std::numeric_limits<double>::infinity()) return normal_cdf(x);
    if (rho == 0.0) return normal_cdf(x) * normal_cdf(y);
    return bvn_upper(-x, -y, rho);
}

double wilcoxon_var_correlated(std::span<const double> delta, const Eigen::MatrixXd& corr,
                               std::span<const std::size_t> members, const WilcoxonVarOptions& options) {
    const std::size_t m = static_cast<std::size_t>(corr.rows());
    if (corr.cols() != corr.rows() || delta.size() != m) {
        throw InputError("means and correlation matrix disagree in size");
    }
    const auto in = membership(members, m);
    std::vector<std::size_t> cbar;
    for (std::size_t i = 0; i < m; ++i) {
        if (!in[i]) cbar.push_back(i);
    }
    const std::size_t mc = members.size(), mcb = cbar.size();
    const double terms = std::pow(static_cast<double>(mc) * static_cast<double>(mcb), 2);
    if (terms > options.max_terms && !options.force) {
        throw InputError("correlated rank-sum variance needs " + std::to_string(terms) +
                         " terms; raise the limit or force");
    }
    auto R = [&](std::size_t a, std::size_t b) {
        return corr(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    };
    // Pair (i, h) quantities: scale of T_i - T_h and standardized mean.
    std::vector<double> scale(mc * mcb), z(mc * mcb), marginal(mc * mcb);
    for (std::size_t a = 0; a < mc; ++a) {
        for (std::size_t b = 0; b < mcb; ++b) {
            const double v = 2.0 - 2.0 * R(members[a], cbar[b]);
            if (!(v > 0.0)) {
                throw InputError("a category gene is perfectly correlated with a complement gene");
            }
            const std::size_t k = a * mcb + b;
            scale[k] = std::sqrt(v);
            z[k] = (delta[members[a]] - delta[cbar[b]]) / scale[k];
            marginal[k] = normal_cdf(z[k]);
        }
    }
    std::vector<double> partial(mc * mc, 0.0);
    parallel_chunks(mc * mc, std::max<std::size_t>(1, options.threads), [&](std::size_t begin, std::size_t end) {
        std::vector<double> row(mcb * mcb);
        for (std::size_t q = begin; q < end; ++q) {
            const std::size_t a = q / mc, a2 = q % mc;
            const std::size_t i = members[a], i2 = members[a2];
            for (std::size_t b = 0; b < mcb; ++b) {
                for (std::size_t b2 = 0; b2 < mcb; ++b2) {
                    const std::size_t h = cbar[b], h2 = cbar[b2];
                    const std::size_t k1 = a * mcb + b, k2 = a2 * mcb + b2;
                    double r;
                    if (i == i2 && h == h2) {
                        r = 1.0;
                    } else {
                        r = (R(i, i2) + R(h, h2) - R(i2, h) - R(i, h2)) / (scale[k1] * scale[k2]);
                        r = std::clamp(r, -1.0, 1.0);
                    }
                    row[b * mcb + b2] = bvn_cdf_closed(z[k1], z[k2], r) - marginal[k1] * marginal[k2];
                }
            }
            partial[q] = pairwise_sum(row);
        }
    });
    return pairwise_sum(partial);
}

double wilcoxon_var_equal_means(const Eigen::MatrixXd& corr, std::span<const std::size_t> members,
                                const WilcoxonVarOptions& options) {
    const std::size_t m = static_cast<std::size_t>(corr.rows());
    const auto in = membership(members, m);
    std::vector<std::size_t> cbar;
    for (std::size_t i = 0; i < m; ++i) {
        if (!in[i]) cbar.push_back(i);
    }
    const double terms = std::pow(static_cast<double>(members.size()) * static_cast<double>(cbar.size()), 2);
    if (terms > options.max_terms && !options.force) {
        throw InputError("arcsine rank-sum variance needs " + std::to_string(terms) + " terms; raise the limit or force");
    }
    auto R = [&](std::size_t a, std::size_t b) {
        return corr(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    };
    std::vector<double> terms_v;
    terms_v.reserve(static_cast<std::size_t>(terms));
    for (auto i : members) {
        for (auto i2 : members) {
            for (auto h : cbar) {
                for (auto h2 : cbar) {
                    double r = 1.0;
                    if (!(i == i2 && h == h2)) {
                        r = (R(i, i2) + R(h, h2) - R(i2, h) - R(i, h2)) /
                            std::sqrt((2.0 - 2.0 * R(i, h)) * (2.0 - 2.0 * R(i2, h2)));
                        r = std::clamp(r, -1.0, 1.0);
                    }
                    terms_v.push_back(std::asin(r));
                }
            }
        }
    }
    return pairwise_sum(terms_v) / (2.0 * std::numbers::pi);
}

double lemma_b2_f(double x, double y, double rho) { return bvn_cdf(x, y, rho) - normal_cdf(x) * normal_cdf(y); }

GridScan lemma_b2_scan(double rho, const GridSpec& grid) {
    if (!(grid.step > 0.0) || !(grid.hi >= grid.lo)) {
        throw InputError("grid needs lo <= hi and a positive step");
    }
    const std::size_t count = static_cast<std::size_t>(std::floor((grid.hi - grid.lo) / grid.step + 1e-9)) + 1;
    std::vector<double> axis(count);
    for (std::size_t k = 0; k < count; ++k) {
        double v = grid.lo + static_cast<double>(k) * grid.step;
        if (std::abs(v) < grid.step / 2.0) v = 0.0;
        axis[k] = v;
    }
    GridScan s;
    s.rho = rho;
    s.max_value = -std::numeric_limits<double>::infinity();
    s.min_value = std::numeric_limits<double>::infinity();
    for (double x : axis) {
        for (double y : axis) {
            const double f = lemma_b2_f(x, y, rho);
            if (f > s.max_value) {
                s.max_value = f;
                s.max_x = x;
                s.max_y = y;
            }
            if (f < s.min_value) {
                s.min_value = f;
                s.min_x = x;
                s.min_y = y;
            }
            s.max_abs = std::max(s.max_abs, std::abs(f));
        }
    }
    s.points = count * count;
    s.f_origin = lemma_b2_f(0.0, 0.0, rho);
    s.closed_form = std::asin(rho) / (2.0 * std::numbers::pi);
    return s;
}

bool is_correlation_dominant(const Eigen::MatrixXd& corr, std::span<const std::size_t> members) {
    const std::size_t m = static_cast<std::size_t>(corr.rows());
    const auto in = membership(members, m);
    double min_c = std::numeric_limits<double>::infinity(), min_cbar = min_c;
    double max_cross = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            const double r = corr(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (in[i] && in[j]) {
                min_c = std::min(min_c, r);
            } else if (!in[i] && !in[j]) {
                min_cbar = std::min(min_cbar, r);
            } else {
                max_cross = std::max(max_cross, r);
            }
        }
    }
    return min_c >= max_cross && min_cbar >= max_cross;
}

Eigen::MatrixXd two_block_correlation(std::size_t m, std::size_t m_c, double rho_within, double rho_cross) {
    const auto M = static_cast<Eigen::Index>(m), C = static_cast<Eigen::Index>(m_c);
    Eigen::MatrixXd r = Eigen::MatrixXd::Constant(M, M, rho_cross);
    r.topLeftCorner(C, C).setConstant(rho_within);
    r.bottomRightCorner(M - C, M - C).setConstant(rho_within);
    r.diagonal().setOnes();
    return r;
}

Theorem2Report theorem2_check(const Theorem2Config& config) {
    if (config.m_c < 2 || config.m_c + 2 > config.m) {
        throw InputError("equal-means check needs 2 <= m_c <= m - 2");
    }
    const auto corr = two_block_correlation(config.m, config.m_c, config.rho_within, config.rho_cross);
    std::vector<std::size_t> members(config.m_c);
    for (std::size_t i = 0; i < config.m_c; ++i) members[i] = i;
    const std::size_t mcb = config.m - config.m_c;

    Theorem2Report report;
    report.correlation_dominant = is_correlation_dominant(corr, members);
    std::vector<double> delta(config.m, 0.0);
    report.equal_variance = wilcoxon_var_correlated(delta, corr, members);
    report.passed = report.correlation_dominant;
    for (double d : config.ds) {
        for (std::size_t k = 1; k < config.m_c; ++k) {
            if ((k * mcb) % config.m_c != 0) continue;
            const std::size_t k_bar = k * mcb / config.m_c;
            std::fill(delta.begin(), delta.end(), 0.0);
            for (std::size_t i = 0; i < k; ++i) delta[i] = d;
            for (std::size_t i = 0; i < k_bar; ++i) delta[config.m_c + i] = d;
            Theorem2Case c;
            c.d = d;
            c.de_in_c = k;
            c.de_in_cbar = k_bar;
            c.variance = wilcoxon_var_correlated(delta, corr, members);
            c.margin = report.equal_variance - c.variance;
            report.passed = report.passed && c.margin > config.margin;
            report.cases.push_back(c);
        }
    }
    report.passed = report.passed && !report.cases.empty();
    return report;
}

} // namespace catsafe
