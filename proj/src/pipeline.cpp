#include "catsafe/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "catsafe/io.hpp"
#include "catsafe/multiplicity.hpp"
#include "catsafe/parallel.hpp"
#include "catsafe/resample.hpp"

namespace catsafe {

void validate_pipeline(const PipelineOptions& options) {
    const bool boot = options.method == TestMethod::BootQuantile || options.method == TestMethod::BootT;
    if (boot && !null_center_theta0(options.spec.kind, 2, 1)) {
        throw InputError("method " + std::string(to_string(options.method)) + " with global " +
                         std::string(to_string(options.spec.kind)) +
                         ": no null center theta0 exists, because the expected Fisher count depends on the "
                         "distributions of the K gene strata");
    }
    if (options.B == 0 && options.method != TestMethod::Class1) throw InputError("--B must be positive");
    if (options.method == TestMethod::BootT && options.B < 2) throw InputError("boot-t needs B >= 2");
    if (!(options.alpha > 0.0 && options.alpha < 1.0)) throw InputError("--alpha must lie in (0, 1)");
    if (options.method == TestMethod::BootQuantile &&
        static_cast<double>(options.B) < std::ceil(1.0 / options.alpha - 1e-9)) {
        throw InputError("boot-q at alpha " + format_double(options.alpha) + " needs B >= " +
                         format_double(std::ceil(1.0 / options.alpha - 1e-9)));
    }
}

namespace {

std::string class1_diagnostics(const Class1Result& r) {
    std::ostringstream o;
    o << "R=" << r.aux.rejected << ";in_c=" << r.aux.rejected_in_c;
    if (r.permutations) o << ";permutations=" << r.permutations;
    if (r.aux.tie_groups) o << ";tie_groups=" << r.aux.tie_groups;
    if (r.degenerate) o << ";degenerate";
    return o.str();
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

} // namespace

std::vector<PipelineRow> run_pipeline(const ExpressionMatrix& matrix, const Response& response,
                                      const CategoryCollection& categories, const PipelineOptions& options) {
    validate_pipeline(options);
    if (categories.empty()) throw InputError("no categories to test");
    const std::size_t m = matrix.genes();
    const std::size_t L = categories.size();
    const std::size_t threads = options.threads == 0 ? default_threads() : options.threads;
    GlobalStatSpec spec = options.spec;
    spec.validate(m);
    std::vector<PipelineRow> rows(L);
    for (std::size_t c = 0; c < L; ++c) {
        rows[c].category = categories[c].name;
        rows[c].m_c = categories[c].members.size();
        rows[c].theta0 = null_center_theta0(spec.kind, m, rows[c].m_c);
    }

    switch (options.method) {
    case TestMethod::Class1:
    case TestMethod::GenePerm: {
        const auto local = compute_local(matrix, response, options.local);
        const auto scores = oriented_scores(local);
        std::size_t max_size = 0;
        for (const auto& c : categories) max_size = std::max(max_size, c.members.size());
        std::optional<Class1Tester> tester;
        std::optional<GlobalStatEvaluator> evaluator;
        GenePermutationOptions gp;
        if (options.method == TestMethod::Class1) {
            Class1Options c1 = options.class1;
            c1.tail = options.tail;
            tester.emplace(scores, spec, c1, max_size);
        } else {
            evaluator.emplace(scores, spec);
            gp.B = options.B;
            gp.seed = options.seed;
            gp.tail = options.tail;
        }
        parallel_chunks(L, threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t c = begin; c < end; ++c) {
                const auto& cat = categories[c];
                const auto r = tester ? tester->test(cat.name, cat.members)
                                      : gene_permutation_test(*evaluator, cat.name, cat.members, gp);
                rows[c].u_obs = r.u_obs;
                rows[c].p = r.p;
                rows[c].method = std::string(to_string(r.method));
                rows[c].diagnostics = class1_diagnostics(r);
            }
        });
        break;
    }
    case TestMethod::ArrayPerm:
    case TestMethod::BootQuantile:
    case TestMethod::BootT: {
        ResamplingPlan plan;
        plan.method = options.method == TestMethod::ArrayPerm ? ResampleMethod::ArrayPermutation
                                                              : ResampleMethod::Bootstrap;
        plan.B = options.B;
        plan.seed = options.seed;
        plan.threads = threads;
        const std::vector<GlobalStatSpec> specs{spec};
        const auto nulls = build_nulls(matrix, response, categories, options.local, specs, plan);
        for (std::size_t c = 0; c < L; ++c) {
            const auto u_star = nulls.resampled(0, c);
            rows[c].u_obs = nulls.observed(0, c);
            std::ostringstream d;
            if (options.method == TestMethod::ArrayPerm) {
                rows[c].p = empirical_pvalue(u_star, rows[c].u_obs, plan.exhaustive, options.tail);
                rows[c].method = "array-permutation";
                d << "B=" << nulls.B;
            } else {
                const auto interval =
                    options.method == TestMethod::BootT ? PivotInterval::TInterval : PivotInterval::Quantile;
                const auto r =
                    bootstrap_pivot_test(u_star, *rows[c].theta0, interval, matrix.arrays(), options.tail);
                rows[c].p = r.p;
                rows[c].method = std::string(to_string(interval));
                d << "B=" << r.diagnostics.B << ";mean=" << format_double(r.diagnostics.mean)
                  << ";se=" << format_double(r.diagnostics.se);
                if (interval == PivotInterval::Quantile) d << ";beyond_theta0=" << r.diagnostics.beyond_theta0;
                if (r.degenerate) d << ";degenerate";
            }
            if (nulls.redraw_count) d << ";redraws=" << nulls.redraw_count;
            rows[c].diagnostics = d.str();
        }
        break;
    }
    }

    std::vector<double> p(L);
    for (std::size_t c = 0; c < L; ++c) p[c] = rows[c].p;
    const auto adj = bonferroni(p, options.alpha);
    for (std::size_t c = 0; c < L; ++c) rows[c].bonferroni_p = adj.adjusted_p[c];
    std::stable_sort(rows.begin(), rows.end(), [](const PipelineRow& a, const PipelineRow& b) {
        if (a.p != b.p) return a.p < b.p;
        return a.category < b.category;
    });
    return rows;
}

void write_pipeline_csv(std::ostream& out, const std::vector<PipelineRow>& rows) {
    out << "#catsafe-report v1\n";
    out << "name,m_C,u_obs,theta0,p,bonferroni_p,method,diagnostics\n";
    for (const auto& r : rows) {
        out << csv_field(r.category) << ',' << r.m_c << ',' << format_double(r.u_obs) << ','
            << (r.theta0 ? format_double(*r.theta0) : "") << ',' << format_double(r.p) << ','
            << format_double(r.bonferroni_p) << ',' << r.method << ',' << csv_field(r.diagnostics) << '\n';
    }
}

} // namespace catsafe
