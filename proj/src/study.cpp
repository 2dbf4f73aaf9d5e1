#include "catsafe/study.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "catsafe/class1.hpp"
#include "catsafe/distributions.hpp"
#include "catsafe/io.hpp"
#include "catsafe/multiplicity.hpp"
#include "catsafe/parallel.hpp"
#include "catsafe/resample.hpp"
#include "catsafe/rng.hpp"

namespace catsafe {

std::string_view to_string(TestMethod method) {
    switch (method) {
    case TestMethod::Class1: return "class1";
    case TestMethod::GenePerm: return "gene-perm";
    case TestMethod::ArrayPerm: return "array-perm";
    case TestMethod::BootQuantile: return "boot-q";
    case TestMethod::BootT: return "boot-t";
    }
    return "?";
}

TestMethod parse_test_method(std::string_view text) {
    if (text == "class1") return TestMethod::Class1;
    if (text == "gene-perm") return TestMethod::GenePerm;
    if (text == "array-perm") return TestMethod::ArrayPerm;
    if (text == "boot-q") return TestMethod::BootQuantile;
    if (text == "boot-t") return TestMethod::BootT;
    throw InputError("unknown method '" + std::string(text) + "' (class1, gene-perm, array-perm, boot-q, boot-t)");
}

std::string TestId::name() const { return std::string(to_string(method)) + "-" + std::string(to_string(global)); }

TestId TestId::parse(std::string_view text) {
    const auto dash = text.rfind('-');
    if (dash == std::string_view::npos) {
        throw InputError("test names look like <method>-<global>, got '" + std::string(text) + "'");
    }
    return {parse_test_method(text.substr(0, dash)), parse_global_kind(text.substr(dash + 1))};
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto item = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (!item.empty()) out.push_back(item);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

double parse_number(std::string_view key, std::string_view text) {
    const auto slash = text.find('/');
    if (slash != std::string_view::npos) {
        return parse_number(key, text.substr(0, slash)) / parse_number(key, text.substr(slash + 1));
    }
    double v = 0.0;
    const auto t = trim(text);
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty() || !std::isfinite(v)) {
        throw InputError("config key '" + std::string(key) + "': '" + std::string(text) + "' is not a number");
    }
    return v;
}

std::size_t parse_count(std::string_view key, std::string_view text) {
    const double v = parse_number(key, text);
    if (v < 0 || v != std::floor(v)) {
        throw InputError("config key '" + std::string(key) + "' needs a nonnegative integer");
    }
    return static_cast<std::size_t>(v);
}

bool parse_bool(std::string_view key, std::string_view text) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw InputError("config key '" + std::string(key) + "' needs true or false");
}

std::vector<double> parse_numbers(std::string_view key, std::string_view text) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(parse_number(key, item));
    return out;
}

std::string join_numbers(const std::vector<double>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + format_double(v[k]);
    return s;
}

std::string_view scenario_name(Scenario s) {
    switch (s) {
    case Scenario::Class1Null: return "class1";
    case Scenario::Class3Null: return "class3";
    case Scenario::CorrelationMap: return "corr-map";
    }
    return "?";
}

} // namespace

void StudyConfig::set(std::string_view key, std::string_view value) {
    const std::string v = trim(value);
    if (key == "version") {
        if (v != "1") throw InputError("unsupported study config version '" + v + "' (expected 1)");
    } else if (key == "scenario") {
        if (v == "class1") scenario = Scenario::Class1Null;
        else if (v == "class3") scenario = Scenario::Class3Null;
        else if (v == "corr-map") scenario = Scenario::CorrelationMap;
        else throw InputError("unknown scenario '" + v + "' (class1, class3, corr-map)");
    } else if (key == "m") m = parse_count(key, v);
    else if (key == "n") n = parse_count(key, v);
    else if (key == "block_size") block_size = parse_count(key, v);
    else if (key == "block_rho") block_rho = parse_number(key, v);
    else if (key == "cross_rho") cross_rho = parse_number(key, v);
    else if (key == "regenerate") regenerate = parse_bool(key, v);
    else if (key == "matrix") matrix_path = v;
    else if (key == "gmt") gmt_path = v;
    else if (key == "min_size") min_size = parse_count(key, v);
    else if (key == "layout") {
        if (v != "windows" && v != "partition") throw InputError("layout must be windows or partition");
        layout = v;
    } else if (key == "categories") categories = parse_count(key, v);
    else if (key == "min_category") min_category = parse_count(key, v);
    else if (key == "max_category") max_category = parse_count(key, v);
    else if (key == "category_size") category_size = parse_count(key, v);
    else if (key == "test_categories") test_categories = parse_count(key, v);
    else if (key == "strata_deltas") strata.deltas = parse_numbers(key, v);
    else if (key == "strata_proportions") strata.proportions = parse_numbers(key, v);
    else if (key == "tests") {
        tests.clear();
        for (const auto& t : split_list(v)) tests.push_back(TestId::parse(t));
    } else if (key == "local") local = LocalStatKind::parse(v, local.s0);
    else if (key == "s0") {
        local.s0 = parse_number(key, v);
    } else if (key == "region") {
        if (v.empty() || v == "default") region.reset();
        else region = RejectionRegion::parse(v);
    } else if (key == "nrep") nrep = parse_count(key, v);
    else if (key == "B") B = parse_count(key, v);
    else if (key == "B_boot") B_boot = parse_count(key, v);
    else if (key == "B_quantile") B_quantile = parse_count(key, v);
    else if (key == "alphas") alphas = parse_numbers(key, v);
    else if (key == "seed") seed = static_cast<std::uint64_t>(parse_count(key, v));
    else if (key == "threads") threads = parse_count(key, v);
    else if (key == "alternative") {
        if (v == "additive") alternative = Alternative::Additive;
        else if (v == "multiplicative") alternative = Alternative::Multiplicative;
        else throw InputError("alternative must be additive or multiplicative");
    } else if (key == "grid") grid = parse_numbers(key, v);
    else if (key == "rho_grid") rho_grid = parse_numbers(key, v);
    else if (key == "pairs") pairs = parse_count(key, v);
    else if (key == "sims") sims = parse_count(key, v);
    else if (key == "corr_locals") corr_locals = split_list(v);
    else if (key == "paper_scale") {
        paper_scale = parse_bool(key, v);
        if (paper_scale) apply_paper_scale();
    } else {
        throw InputError("unknown study config key '" + std::string(key) + "'");
    }
}

StudyConfig StudyConfig::parse(std::istream& in) {
    StudyConfig c;
    std::string line;
    std::size_t number = 0;
    bool versioned = false;
    while (std::getline(in, line)) {
        ++number;
        const auto t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ParseError("study config line " + std::to_string(number) + " is not key=value", number, 0);
        }
        const auto key = trim(std::string_view(t).substr(0, eq));
        try {
            c.set(key, std::string_view(t).substr(eq + 1));
        } catch (const ParseError&) {
            throw;
        } catch (const InputError& e) {
            throw ParseError("study config line " + std::to_string(number) + ": " + e.what(), number, 0);
        }
        versioned = versioned || key == "version";
    }
    if (!versioned) {
        throw InputError("study config must declare version=1");
    }
    return c;
}

StudyConfig StudyConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open study config " + path.string());
    return parse(in);
}

std::string StudyConfig::to_text() const {
    std::ostringstream o;
    o << "version=1\n";
    o << "scenario=" << scenario_name(scenario) << '\n';
    o << "m=" << m << "\nn=" << n << "\nblock_size=" << block_size << "\nblock_rho=" << format_double(block_rho)
      << "\ncross_rho=" << format_double(cross_rho) << "\nregenerate=" << (regenerate ? "true" : "false") << '\n';
    if (!matrix_path.empty()) o << "matrix=" << matrix_path << '\n';
    if (!gmt_path.empty()) o << "gmt=" << gmt_path << '\n';
    o << "min_size=" << min_size << "\nlayout=" << layout << "\ncategories=" << categories
      << "\nmin_category=" << min_category << "\nmax_category=" << max_category << "\ncategory_size=" << category_size
      << "\ntest_categories=" << test_categories << '\n';
    o << "strata_deltas=" << join_numbers(strata.deltas) << "\nstrata_proportions=" << join_numbers(strata.proportions)
      << '\n';
    o << "tests=";
    for (std::size_t k = 0; k < tests.size(); ++k) o << (k ? "," : "") << tests[k].name();
    o << '\n';
    const auto local_name = local.to_string();
    o << "local=" << (local.tag == LocalStatTag::SamT ? std::string("sam-t") : local_name) << '\n';
    o << "s0=" << format_double(local.s0) << '\n';
    o << "region=" << (region ? region->to_string() : std::string("default")) << '\n';
    o << "nrep=" << nrep << "\nB=" << B << "\nB_boot=" << B_boot << "\nB_quantile=" << B_quantile << '\n';
    o << "alphas=" << join_numbers(alphas) << "\nseed=" << seed << '\n';
    o << "alternative=" << (alternative == Alternative::Additive ? "additive" : "multiplicative") << '\n';
    o << "grid=" << join_numbers(grid) << '\n';
    o << "rho_grid=" << join_numbers(rho_grid) << "\npairs=" << pairs << "\nsims=" << sims << '\n';
    o << "corr_locals=";
    for (std::size_t k = 0; k < corr_locals.size(); ++k) o << (k ? "," : "") << corr_locals[k];
    o << '\n';
    return o.str();
}

void StudyConfig::apply_paper_scale() {
    m = 7299;
    categories = 1823;
    nrep = 10000;
    B = 2000;
    B_quantile = 2000;
    B_boot = 200;
}

void StudyConfig::validate() const {
    for (double a : alphas) {
        if (!(a > 0.0 && a < 1.0)) throw InputError("alphas must lie in (0, 1)");
    }
    if (alphas.empty()) throw InputError("at least one alpha is required");
    if (scenario == Scenario::CorrelationMap) {
        if (rho_grid.empty()) throw InputError("corr-map needs a rho_grid");
        for (double r : rho_grid) {
            if (!(std::abs(r) < 1.0)) throw InputError("rho_grid values must lie in (-1, 1)");
        }
        if (pairs < 3 || sims < 1) throw InputError("corr-map needs pairs >= 3 and sims >= 1");
        if (n < 8) throw InputError("corr-map needs n >= 8");
        return;
    }
    if (nrep < 1) throw InputError("nrep must be positive");
    if (!matrix_path.empty() && regenerate) throw InputError("regenerate applies to synthetic matrices only");
    if (!local.compatible_with(ResponseKind::TwoGroup)) {
        throw InputError("calibration and power studies randomize a two-group response; local statistic " +
                         local.to_string() + " does not apply");
    }
    if (scenario == Scenario::Class3Null) {
        strata.validate();
        if (gmt_path.empty() && layout != "partition") {
            throw InputError("class3 scenarios need disjoint categories (layout=partition or a GMT)");
        }
    }
    for (const auto& t : tests) {
        if ((t.method == TestMethod::BootQuantile || t.method == TestMethod::BootT) &&
            t.global == GlobalKind::FisherCount) {
            throw InputError("test " + t.name() +
                             ": the Fisher count has no fixed null center under stratified nulls, so the bootstrap "
                             "pivot test is undefined");
        }
    }
    const double min_alpha = *std::min_element(alphas.begin(), alphas.end());
    const bool quantile = std::any_of(tests.begin(), tests.end(),
                                      [](const TestId& t) { return t.method == TestMethod::BootQuantile; });
    if (quantile && static_cast<double>(B_quantile) < std::ceil(1.0 / min_alpha - 1e-9)) {
        throw InputError("B_quantile must be at least 1 / (smallest alpha) for boot-q tests");
    }
    if (B < 1 || B_boot < 2 || B_quantile < 1) throw InputError("resample counts must be positive (B_boot >= 2)");
}

namespace {

constexpr std::uint64_t kMatrixStream = 1;
constexpr std::uint64_t kResponseStream = 2;
constexpr std::uint64_t kGenePermStream = 3;
constexpr std::uint64_t kArrayPermStream = 4;
constexpr std::uint64_t kBootStream = 5;
constexpr std::uint64_t kCategoryStream = 6;
constexpr std::uint64_t kCorrStream = 7;

struct StudyContext {
    const StudyConfig& cfg;
    SyntheticDesign design;
    std::optional<ExpressionMatrix> fixed;
    CategoryCollection categories;
    CategoryCollection tested;
    std::vector<double> base_delta;
    std::vector<unsigned char> alternative_gene;
    std::size_t m = 0;
    std::size_t n = 0;
    std::vector<GlobalStatSpec> specs; // by GlobalKind index

    const GlobalStatSpec& spec(GlobalKind k) const { return specs[static_cast<std::size_t>(k)]; }
};

CategoryCollection greedy_disjoint(const CategoryCollection& all, const StrataSpec* strata) {
    CategoryCollection out;
    std::vector<unsigned char> used;
    for (const auto& c : all) {
        if (strata && !strata->exact_for(c.members.size())) continue;
        if (!c.members.empty() && used.size() <= c.members.back()) used.resize(c.members.back() + 1, 0);
        if (std::any_of(c.members.begin(), c.members.end(), [&](std::size_t i) { return used[i] != 0; })) continue;
        for (auto i : c.members) used[i] = 1;
        out.push_back(c);
    }
    if (out.empty()) throw InputError("no disjoint categories satisfy the strata proportions");
    return out;
}

StudyContext make_context(const StudyConfig& cfg, bool power) {
    cfg.validate();
    StudyContext ctx{cfg, {}, {}, {}, {}, {}, {}, 0, 0, {}};
    const bool stratified = cfg.scenario == Scenario::Class3Null || power;
    if (!cfg.matrix_path.empty()) {
        ctx.fixed = parse_expression_matrix(cfg.matrix_path);
        ctx.m = ctx.fixed->genes();
        ctx.n = ctx.fixed->arrays();
    } else {
        ctx.design = SyntheticDesign::uniform_blocks(cfg.m, cfg.n, cfg.block_size, cfg.block_rho);
        ctx.design.cross_rho = cfg.cross_rho;
        ctx.design.validate();
        ctx.m = cfg.m;
        ctx.n = cfg.n;
        if (!cfg.regenerate) ctx.fixed = synth_matrix(ctx.design, stream_key(cfg.seed, kMatrixStream));
    }
    if (ctx.n % 2 != 0) throw InputError("randomized responses need an even number of arrays");

    if (!cfg.gmt_path.empty()) {
        if (!ctx.fixed) throw InputError("a GMT file needs a fixed matrix (matrix=...)");
        const auto gmt = parse_gmt(cfg.gmt_path);
        ctx.categories = align_and_filter(gmt.sets, *ctx.fixed, cfg.min_size).categories;
        if (stratified) ctx.categories = greedy_disjoint(ctx.categories, &cfg.strata);
    } else if (cfg.layout == "partition") {
        ctx.categories = partition_categories(ctx.m, cfg.category_size, cfg.categories);
    } else {
        ctx.categories = window_categories(ctx.m, cfg.categories, cfg.min_category, cfg.max_category,
                                           stream_key(cfg.seed, kCategoryStream));
        if (stratified) ctx.categories = greedy_disjoint(ctx.categories, &cfg.strata);
    }
    if (ctx.categories.empty()) throw InputError("the study has no categories");

    std::size_t k = cfg.test_categories;
    if (power && k == 0) k = 4;
    if (k == 0 || k > ctx.categories.size()) k = ctx.categories.size();
    ctx.tested.assign(ctx.categories.begin(), ctx.categories.begin() + static_cast<std::ptrdiff_t>(k));

    if (stratified) {
        cfg.strata.validate();
        ctx.base_delta = strata_deltas(cfg.strata, assign_strata(cfg.strata, ctx.categories, ctx.m));
    }
    if (power) {
        ctx.alternative_gene.assign(ctx.m, 0);
        for (const auto& c : ctx.tested) {
            for (auto i : c.members) ctx.alternative_gene[i] = 1;
        }
    }
    const auto region = cfg.region.value_or(RejectionRegion::upper_tail(
        student_t_quantile(0.95, static_cast<double>(ctx.n) - 2.0)));
    for (auto kind : {GlobalKind::FisherCount, GlobalKind::PearsonDiffProp, GlobalKind::AvgDiff,
                      GlobalKind::WilcoxonRankSum}) {
        GlobalStatSpec s;
        s.kind = kind;
        if (s.categorical()) s.region = region;
        ctx.specs.push_back(s);
    }
    return ctx;
}

struct ReplicateResult {
    std::vector<std::vector<double>> p; // [test][tested category]
    std::vector<double> rank_sum;       // observed U_W per tested category
};

ReplicateResult run_replicate(const StudyContext& ctx, std::size_t r, std::optional<double> shift) {
    const auto& cfg = ctx.cfg;
    const std::uint64_t rep = stream_key(cfg.seed, 1000, r);
    ExpressionMatrix X = ctx.fixed ? *ctx.fixed : synth_matrix(ctx.design, stream_key(rep, kMatrixStream));
    const Response y = randomize_response(ctx.n, stream_key(rep, kResponseStream));

    std::vector<double> delta = ctx.base_delta;
    if (shift) {
        if (delta.empty()) delta.assign(ctx.m, 0.0);
        for (std::size_t i = 0; i < ctx.m; ++i) {
            if (!ctx.alternative_gene[i]) continue;
            delta[i] = cfg.alternative == Alternative::Additive ? delta[i] + *shift : delta[i] * *shift;
        }
    }
    if (std::any_of(delta.begin(), delta.end(), [](double d) { return d != 0.0; })) {
        X = inject_profile(X, y, delta);
    }

    const auto local = compute_local(X, y, cfg.local);
    const auto scores = oriented_scores(local);
    const std::size_t L = ctx.tested.size();
    std::size_t max_size = 0;
    for (const auto& c : ctx.tested) max_size = std::max(max_size, c.members.size());

    ReplicateResult out;
    out.p.assign(cfg.tests.size(), std::vector<double>(L, 1.0));
    {
        const GlobalStatEvaluator w(scores, ctx.spec(GlobalKind::WilcoxonRankSum));
        for (const auto& c : ctx.tested) out.rank_sum.push_back(w.value(c.members));
    }

    std::vector<GlobalStatSpec> perm_specs, boot_specs;
    std::size_t boot_B = 0;
    auto add_spec = [](std::vector<GlobalStatSpec>& v, const GlobalStatSpec& s) {
        if (std::none_of(v.begin(), v.end(), [&](const GlobalStatSpec& x) { return x.kind == s.kind; })) v.push_back(s);
    };
    for (const auto& t : cfg.tests) {
        if (t.method == TestMethod::ArrayPerm) add_spec(perm_specs, ctx.spec(t.global));
        if (t.method == TestMethod::BootQuantile) {
            add_spec(boot_specs, ctx.spec(t.global));
            boot_B = std::max(boot_B, cfg.B_quantile);
        }
        if (t.method == TestMethod::BootT) {
            add_spec(boot_specs, ctx.spec(t.global));
            boot_B = std::max(boot_B, cfg.B_boot);
        }
    }
    auto spec_index = [](const std::vector<GlobalStatSpec>& v, GlobalKind k) {
        return static_cast<std::size_t>(
            std::find_if(v.begin(), v.end(), [&](const GlobalStatSpec& s) { return s.kind == k; }) - v.begin());
    };
    std::optional<NullSet> perm, boot;
    if (!perm_specs.empty()) {
        ResamplingPlan plan{ResampleMethod::ArrayPermutation, cfg.B, stream_key(rep, kArrayPermStream), 0, false, 1};
        perm = build_nulls(X, y, ctx.tested, cfg.local, perm_specs, plan);
    }
    if (!boot_specs.empty()) {
        ResamplingPlan plan{ResampleMethod::Bootstrap, boot_B, stream_key(rep, kBootStream), 0, false, 1};
        boot = build_nulls(X, y, ctx.tested, cfg.local, boot_specs, plan);
    }

    for (std::size_t ti = 0; ti < cfg.tests.size(); ++ti) {
        const auto& t = cfg.tests[ti];
        auto& row = out.p[ti];
        switch (t.method) {
        case TestMethod::Class1: {
            const Class1Tester tester(scores, ctx.spec(t.global), {}, max_size);
            for (std::size_t c = 0; c < L; ++c) row[c] = tester.test(ctx.tested[c].name, ctx.tested[c].members).p;
            break;
        }
        case TestMethod::GenePerm: {
            const GlobalStatEvaluator ev(scores, ctx.spec(t.global));
            GenePermutationOptions opt;
            opt.B = cfg.B;
            opt.seed = stream_key(rep, kGenePermStream);
            for (std::size_t c = 0; c < L; ++c) {
                row[c] = gene_permutation_test(ev, ctx.tested[c].name, ctx.tested[c].members, opt).p;
            }
            break;
        }
        case TestMethod::ArrayPerm: {
            const std::size_t s = spec_index(perm_specs, t.global);
            for (std::size_t c = 0; c < L; ++c) row[c] = empirical_pvalue(perm->resampled(s, c), perm->observed(s, c));
            break;
        }
        case TestMethod::BootQuantile:
        case TestMethod::BootT: {
            const std::size_t s = spec_index(boot_specs, t.global);
            const bool quantile = t.method == TestMethod::BootQuantile;
            const std::size_t use = quantile ? cfg.B_quantile : cfg.B_boot;
            for (std::size_t c = 0; c < L; ++c) {
                const auto theta0 = null_center_theta0(t.global, ctx.m, ctx.tested[c].members.size());
                const auto u = boot->resampled(s, c).first(use);
                row[c] = bootstrap_pivot_test(u, *theta0, quantile ? PivotInterval::Quantile : PivotInterval::TInterval,
                                              ctx.n)
                             .p;
            }
            break;
        }
        }
    }
    return out;
}

std::vector<ReplicateResult> run_replicates(const StudyContext& ctx, std::optional<double> shift) {
    std::vector<ReplicateResult> results(ctx.cfg.nrep);
    const std::size_t threads = ctx.cfg.threads == 0 ? default_threads() : ctx.cfg.threads;
    parallel_chunks(ctx.cfg.nrep, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) results[r] = run_replicate(ctx, r, shift);
    });
    return results;
}

void summarize(const StudyContext& ctx, const std::vector<ReplicateResult>& results, std::optional<double> grid,
               StudyReport& report, bool keep_pooled) {
    const auto& cfg = ctx.cfg;
    for (std::size_t ti = 0; ti < cfg.tests.size(); ++ti) {
        std::vector<double> pooled;
        std::vector<std::vector<double>> by_rep;
        by_rep.reserve(results.size());
        for (const auto& r : results) {
            pooled.insert(pooled.end(), r.p[ti].begin(), r.p[ti].end());
            by_rep.push_back(r.p[ti]);
        }
        const double min_p = pooled.empty() ? 1.0 : *std::min_element(pooled.begin(), pooled.end());
        for (double a : cfg.alphas) {
            TestSummaryRow row;
            row.test = cfg.tests[ti].name();
            row.alpha = a;
            row.grid = grid;
            row.n_pvalues = pooled.size();
            row.rejections = static_cast<std::size_t>(std::count_if(pooled.begin(), pooled.end(),
                                                                    [&](double p) { return p <= a; }));
            row.realized = static_cast<double>(row.rejections) / static_cast<double>(pooled.size());
            row.ratio = row.realized / a;
            row.fwer = fwer_estimate(by_rep, a);
            row.min_p = min_p;
            report.rows.push_back(row);
        }
        if (keep_pooled) report.pooled[cfg.tests[ti].name()] = std::move(pooled);
    }
}

void add_moments(const StudyContext& ctx, const std::vector<ReplicateResult>& results, StudyReport& report) {
    for (std::size_t c = 0; c < ctx.tested.size(); ++c) {
        CategoryMoment mo;
        mo.category = ctx.tested[c].name;
        mo.m_c = ctx.tested[c].members.size();
        mo.theta0 = *null_center_theta0(GlobalKind::WilcoxonRankSum, ctx.m, mo.m_c);
        mo.replicates = results.size();
        double sum = 0.0;
        for (const auto& r : results) sum += r.rank_sum[c];
        mo.mean = sum / static_cast<double>(results.size());
        double ss = 0.0;
        for (const auto& r : results) ss += (r.rank_sum[c] - mo.mean) * (r.rank_sum[c] - mo.mean);
        mo.se = results.size() > 1
                    ? std::sqrt(ss / static_cast<double>(results.size() - 1) / static_cast<double>(results.size()))
                    : 0.0;
        report.moments.push_back(mo);
    }
}

} // namespace

StudyReport run_calibration_study(const StudyConfig& config) {
    if (config.scenario == Scenario::CorrelationMap) return run_correlation_map(config);
    const auto ctx = make_context(config, false);
    const auto results = run_replicates(ctx, std::nullopt);
    StudyReport report;
    report.study = "calibration";
    report.scenario = std::string(scenario_name(config.scenario));
    report.config_text = config.to_text();
    summarize(ctx, results, std::nullopt, report, true);
    add_moments(ctx, results, report);
    return report;
}

StudyReport run_power_study(const StudyConfig& config) {
    if (config.grid.empty()) throw InputError("power study needs a nonempty grid");
    if (config.scenario == Scenario::CorrelationMap) throw InputError("power studies need a class1 or class3 null");
    const auto ctx = make_context(config, true);
    StudyReport report;
    report.study = "power";
    report.scenario = std::string(scenario_name(config.scenario));
    report.config_text = config.to_text();
    for (std::size_t g = 0; g < config.grid.size(); ++g) {
        const auto results = run_replicates(ctx, config.grid[g]);
        summarize(ctx, results, config.grid[g], report, g == 0);
        if (g == 0) add_moments(ctx, results, report);
    }
    return report;
}

namespace {

double sample_correlation(std::span<const double> a, std::span<const double> b) {
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        sab += (a[k] - ma) * (b[k] - mb);
        saa += (a[k] - ma) * (a[k] - ma);
        sbb += (b[k] - mb) * (b[k] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

double quantile_sorted(const std::vector<double>& v, double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Response corr_map_response(std::string_view local, std::size_t n, std::uint64_t key) {
    if (local == "cox-wald") return random_survival_response(n, key);
    if (local == "anova-f") {
        std::vector<int> labels(n);
        for (std::size_t j = 0; j < n; ++j) labels[j] = static_cast<int>(j % 4) + 1;
        CounterRng rng(stream_key(key));
        rng.shuffle(std::span<int>(labels));
        return Response::multi_group(std::move(labels));
    }
    return randomize_response(n, key);
}

} // namespace

StudyReport run_correlation_map(const StudyConfig& config) {
    StudyConfig cfg = config;
    cfg.scenario = Scenario::CorrelationMap;
    cfg.validate();
    StudyReport report;
    report.study = "corr-map";
    report.scenario = "corr-map";
    report.config_text = cfg.to_text();
    const std::size_t n = cfg.n, pairs = cfg.pairs, G = cfg.rho_grid.size();
    std::vector<std::string> genes(2 * pairs), arrays(n);
    for (std::size_t i = 0; i < 2 * pairs; ++i) genes[i] = "p" + std::to_string(i / 2 + 1) + (i % 2 ? "b" : "a");
    for (std::size_t j = 0; j < n; ++j) arrays[j] = "a" + std::to_string(j + 1);

    for (std::size_t li = 0; li < cfg.corr_locals.size(); ++li) {
        const auto& local_name = cfg.corr_locals[li];
        const auto kind = LocalStatKind::parse(local_name, cfg.local.s0);
        std::vector<std::vector<double>> rho_t(G, std::vector<double>(cfg.sims));
        const std::size_t threads = cfg.threads == 0 ? default_threads() : cfg.threads;
        parallel_chunks(G * cfg.sims, threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t q = begin; q < end; ++q) {
                const std::size_t g = q / cfg.sims, s = q % cfg.sims;
                const double rho = cfg.rho_grid[g];
                for (std::uint64_t attempt = 0;; ++attempt) {
                    const std::uint64_t key = stream_key(cfg.seed, kCorrStream, g, s, attempt);
                    CounterRng rng(stream_key(key, 1));
                    std::vector<double> values(2 * pairs * n);
                    for (std::size_t p = 0; p < pairs; ++p) {
                        for (std::size_t j = 0; j < n; ++j) {
                            const double z1 = rng.normal();
                            const double z2 = rho * z1 + std::sqrt(1.0 - rho * rho) * rng.normal();
                            values[(2 * p) * n + j] = z1;
                            values[(2 * p + 1) * n + j] = z2;
                        }
                    }
                    const ExpressionMatrix X(genes, arrays, std::move(values));
                    const Response y = corr_map_response(local_name, n, stream_key(key, 2));
                    try {
                        const auto t = compute_local(X, y, kind);
                        std::vector<double> a(pairs), b(pairs);
                        for (std::size_t p = 0; p < pairs; ++p) {
                            a[p] = t.values[2 * p];
                            b[p] = t.values[2 * p + 1];
                        }
                        rho_t[g][s] = sample_correlation(a, b);
                        break;
                    } catch (const ConvergenceError&) {
                    } catch (const DegenerateError&) {
                    }
                }
            }
        });
        std::vector<double> xs, ys;
        for (std::size_t g = 0; g < G; ++g) {
            auto v = rho_t[g];
            std::sort(v.begin(), v.end());
            CorrMapRow row{local_name, cfg.rho_grid[g], quantile_sorted(v, 0.5), quantile_sorted(v, 0.05),
                           quantile_sorted(v, 0.95)};
            report.corr_rows.push_back(row);
            xs.push_back(row.rho_x);
            ys.push_back(row.median);
        }
        const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(G);
        const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(G);
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t g = 0; g < G; ++g) {
            sxy += (xs[g] - mx) * (ys[g] - my);
            sxx += (xs[g] - mx) * (xs[g] - mx);
        }
        const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
        report.corr_fits.push_back({local_name, slope, my - slope * mx});
    }
    return report;
}

} // namespace catsafe
