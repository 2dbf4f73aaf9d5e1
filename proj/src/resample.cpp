#include "catsafe/resample.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "catsafe/distributions.hpp"
#include "catsafe/io.hpp"
#include "catsafe/numeric.hpp"
#include "catsafe/parallel.hpp"
#include "catsafe/rng.hpp"

namespace catsafe {

std::string_view to_string(ResampleMethod method) {
    return method == ResampleMethod::ArrayPermutation ? "array-permutation" : "bootstrap";
}

std::string_view to_string(PivotInterval interval) {
    return interval == PivotInterval::Quantile ? "bootstrap-quantile" : "bootstrap-t";
}

NullDistribution NullSet::extract(std::size_t spec, std::size_t category) const {
    NullDistribution d;
    d.category = categories[category];
    d.spec = specs[spec];
    d.u_obs = observed(spec, category);
    const auto r = resampled(spec, category);
    d.u_star.assign(r.begin(), r.end());
    d.plan = plan;
    d.redraw_count = redraw_count;
    return d;
}

namespace {

std::size_t factorial_count(std::size_t n) {
    std::size_t f = 1;
    for (std::size_t k = 2; k <= n; ++k) f *= k;
    return f;
}

// Permutation number `index` in lexicographic order (Lehmer decoding).
void nth_permutation(std::size_t n, std::size_t index, std::vector<std::size_t>& out) {
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    out.resize(n);
    std::size_t f = factorial_count(n);
    for (std::size_t k = 0; k < n; ++k) {
        f /= (n - k);
        const std::size_t q = index / f;
        index %= f;
        out[k] = pool[q];
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(q));
    }
}

struct DrawResult {
    std::size_t redraws = 0;
    bool ok = false;
};

// Draws resample b into `local`, redrawing degenerate designs.
class Resampler {
public:
    Resampler(const LocalStatEngine& engine, const ResamplingPlan& plan)
        : engine_(engine), plan_(plan), n_(engine.matrix().arrays()) {
        identity_.resize(n_);
        std::iota(identity_.begin(), identity_.end(), std::size_t{0});
        if (plan.method == ResampleMethod::ArrayPermutation && engine.response().is_constant()) {
            throw InputError("array permutation needs a response that varies across arrays");
        }
        if (plan.exhaustive) {
            if (plan.method != ResampleMethod::ArrayPermutation) {
                throw InputError("exhaustive enumeration is only available for array permutation");
            }
            if (n_ > 10) {
                throw InputError("exhaustive array permutation is limited to n <= 10 arrays");
            }
        } else if (plan.B < 1) {
            throw InputError("resampling needs B >= 1");
        }
    }

    std::size_t count() const { return plan_.exhaustive ? factorial_count(n_) : plan_.B; }

    DrawResult draw(std::size_t b, std::size_t max_redraws, std::span<double> local) {
        DrawResult r;
        for (std::size_t attempt = 0; attempt <= max_redraws; ++attempt) {
            DesignView design = make_design(b, attempt);
            if (engine_.design_supported(design)) {
                try {
                    engine_.compute(design, local);
                    r.ok = true;
                    return r;
                } catch (const DegenerateError&) {
                } catch (const ConvergenceError&) {
                }
            }
            if (plan_.exhaustive) {
                break;
            }
            ++r.redraws;
        }
        return r;
    }

private:
    DesignView make_design(std::size_t b, std::size_t attempt) {
        if (plan_.exhaustive) {
            nth_permutation(n_, b, perm_);
            return {identity_, perm_};
        }
        CounterRng rng(stream_key(plan_.seed, static_cast<std::uint64_t>(plan_.method), b, attempt));
        if (plan_.method == ResampleMethod::ArrayPermutation) {
            perm_ = identity_;
            rng.shuffle(std::span<std::size_t>(perm_));
            return {identity_, perm_};
        }
        perm_.resize(n_);
        for (auto& v : perm_) v = rng.below(n_);
        return {perm_, perm_};
    }

    const LocalStatEngine& engine_;
    const ResamplingPlan& plan_;
    std::size_t n_;
    std::vector<std::size_t> identity_;
    std::vector<std::size_t> perm_;
};

[[noreturn]] void throw_redraw_limit(const ResamplingPlan& plan) {
    throw Error("bootstrap redraw limit (" + std::to_string(plan.effective_redraw_limit()) +
                ") exhausted: the design cannot be resampled while keeping every group (or an event)");
}

} // namespace

NullSet build_nulls(const ExpressionMatrix& matrix, const Response& response, const CategoryCollection& categories,
                    LocalStatKind local, std::span<const GlobalStatSpec> specs, const ResamplingPlan& plan) {
    if (specs.empty() || categories.empty()) {
        throw InputError("resampling needs at least one global statistic and one category");
    }
    for (const auto& s : specs) s.validate(matrix.genes());
    const LocalStatEngine engine(matrix, response, local);

    NullSet out;
    out.specs.assign(specs.begin(), specs.end());
    out.genes = matrix.genes();
    out.plan = plan;
    for (const auto& c : categories) {
        out.categories.push_back(c.name);
        out.category_sizes.push_back(c.members.size());
    }
    const std::size_t L = categories.size(), S = specs.size();

    const auto observed = engine.compute();
    const auto scores = oriented_scores(observed);
    out.u_obs.resize(S * L);
    for (std::size_t s = 0; s < S; ++s) {
        const GlobalStatEvaluator ev(scores, specs[s]);
        for (std::size_t c = 0; c < L; ++c) out.u_obs[s * L + c] = ev.value(categories[c].members);
    }

    const std::size_t B = Resampler(engine, plan).count();
    out.B = B;
    out.u_star.assign(S * L * B, 0.0);
    const std::size_t limit = plan.effective_redraw_limit();
    std::vector<std::size_t> redraws(B, 0);
    std::vector<unsigned char> failed(B, 0);
    const bool flip = !observed.higher_is_more_de;

    parallel_chunks(B, plan.threads == 0 ? default_threads() : plan.threads, [&](std::size_t begin, std::size_t end) {
        Resampler resampler(engine, plan);
        std::vector<double> t(matrix.genes());
        for (std::size_t b = begin; b < end; ++b) {
            const auto r = resampler.draw(b, limit, t);
            redraws[b] = r.redraws;
            if (!r.ok) {
                failed[b] = 1;
                continue;
            }
            if (flip) {
                for (auto& v : t) v = -v;
            }
            for (std::size_t s = 0; s < S; ++s) {
                const GlobalStatEvaluator ev(t, specs[s]);
                for (std::size_t c = 0; c < L; ++c) {
                    out.u_star[(s * L + c) * B + b] = ev.value(categories[c].members);
                }
            }
        }
    });

    out.redraw_count = std::accumulate(redraws.begin(), redraws.end(), std::size_t{0});
    if (std::any_of(failed.begin(), failed.end(), [](auto f) { return f != 0; })) {
        if (plan.exhaustive) {
            throw Error("an enumerated permutation produced undefined local statistics");
        }
        throw_redraw_limit(plan);
    }
    if (out.redraw_count > limit) {
        throw_redraw_limit(plan);
    }
    return out;
}

NullDistribution build_null(const ExpressionMatrix& matrix, const Response& response, const Category& category,
                            LocalStatKind local, const GlobalStatSpec& spec, const ResamplingPlan& plan) {
    const CategoryCollection one{category};
    return build_nulls(matrix, response, one, local, std::span<const GlobalStatSpec>(&spec, 1), plan).extract(0, 0);
}

std::vector<std::vector<double>> resample_local_stats(const ExpressionMatrix& matrix, const Response& response,
                                                      LocalStatKind local, const ResamplingPlan& plan) {
    const LocalStatEngine engine(matrix, response, local);
    const std::size_t B = Resampler(engine, plan).count();
    const std::size_t limit = plan.effective_redraw_limit();
    std::vector<std::vector<double>> out(B, std::vector<double>(matrix.genes()));
    std::vector<std::size_t> redraws(B, 0);
    std::vector<unsigned char> failed(B, 0);
    parallel_chunks(B, plan.threads == 0 ? default_threads() : plan.threads, [&](std::size_t begin, std::size_t end) {
        Resampler resampler(engine, plan);
        for (std::size_t b = begin; b < end; ++b) {
            const auto r = resampler.draw(b, limit, out[b]);
            redraws[b] = r.redraws;
            failed[b] = !r.ok;
        }
    });
    if (std::any_of(failed.begin(), failed.end(), [](auto f) { return f != 0; }) ||
        std::accumulate(redraws.begin(), redraws.end(), std::size_t{0}) > limit) {
        throw_redraw_limit(plan);
    }
    return out;
}

double empirical_pvalue(std::span<const double> u_star, double u_obs, bool exhaustive, Tail tail) {
    if (u_star.empty()) {
        throw InputError("empirical p-value needs at least one resample");
    }
    std::size_t count = 0;
    for (double u : u_star) {
        count += tail == Tail::Upper ? at_least(u, u_obs) : at_most(u, u_obs);
    }
    const double B = static_cast<double>(u_star.size());
    if (exhaustive) {
        return std::max(static_cast<double>(count), 1.0) / B;
    }
    return (1.0 + static_cast<double>(count)) / (B + 1.0);
}

double empirical_pvalue(const NullDistribution& null, Tail tail) {
    return empirical_pvalue(null.u_star, null.u_obs, null.plan.exhaustive, tail);
}

std::optional<double> null_center_theta0(GlobalKind kind, std::size_t m, std::size_t m_c) {
    switch (kind) {
    case GlobalKind::WilcoxonRankSum: return static_cast<double>(m_c) * (static_cast<double>(m) + 1.0) / 2.0;
    case GlobalKind::AvgDiff:
    case GlobalKind::PearsonDiffProp: return 0.0;
    case GlobalKind::FisherCount: return std::nullopt;
    }
    return std::nullopt;
}

CategoryTestResult bootstrap_pivot_test(std::span<const double> u_star, double theta0, PivotInterval interval,
                                        std::size_t n_arrays, Tail tail) {
    const std::size_t B = u_star.size();
    if (B == 0) {
        throw InputError("bootstrap pivot test needs at least one resample");
    }
    CategoryTestResult r;
    r.theta0 = theta0;
    r.method = std::string(to_string(interval));
    r.diagnostics.B = B;
    const double mean = pairwise_sum(u_star) / static_cast<double>(B);
    double ss = 0.0;
    for (double u : u_star) ss += (u - mean) * (u - mean);
    r.diagnostics.mean = mean;
    r.diagnostics.se = B > 1 ? std::sqrt(ss / static_cast<double>(B - 1)) : 0.0;

    if (interval == PivotInterval::Quantile) {
        std::size_t count = 0;
        for (double u : u_star) count += tail == Tail::Upper ? at_most(u, theta0) : at_least(u, theta0);
        r.diagnostics.beyond_theta0 = count;
        r.p = (1.0 + static_cast<double>(count)) / (static_cast<double>(B) + 1.0);
        return r;
    }
    if (n_arrays < 2) {
        throw InputError("bootstrap t-interval needs at least two arrays");
    }
    if (!(r.diagnostics.se > 0.0)) {
        r.degenerate = true;
        r.p = 1.0;
        return r;
    }
    const double stat = (mean - theta0) / r.diagnostics.se;
    const double df = static_cast<double>(n_arrays) - 1.0;
    r.p = student_t_sf(tail == Tail::Upper ? stat : -stat, df);
    r.p = std::clamp(r.p, std::numeric_limits<double>::min(), 1.0);
    return r;
}

CategoryTestResult bootstrap_pivot_test(const NullDistribution& null, double theta0, PivotInterval interval,
                                        std::size_t n_arrays, Tail tail) {
    auto r = bootstrap_pivot_test(null.u_star, theta0, interval, n_arrays, tail);
    r.category = null.category;
    r.u_obs = null.u_obs;
    return r;
}

void write_null_distribution(std::ostream& out, const NullDistribution& null) {
    out << "# category=" << null.category << '\n';
    out << "# global=" << to_string(null.spec.kind);
    if (null.spec.region) out << " region=" << null.spec.region->to_string();
    out << '\n';
    out << "# method=" << to_string(null.plan.method) << " B=" << null.u_star.size() << " seed=" << null.plan.seed
        << " redraws=" << null.redraw_count << '\n';
    out << "# u_obs=" << format_double(null.u_obs) << '\n';
    out << "u_star\n";
    for (double u : null.u_star) out << format_double(u) << '\n';
}

} // namespace catsafe
