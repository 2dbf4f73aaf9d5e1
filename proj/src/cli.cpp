#include "catsafe/cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "catsafe/analytic.hpp"
#include "catsafe/distributions.hpp"
#include "catsafe/io.hpp"
#include "catsafe/pipeline.hpp"
#include "catsafe/rng.hpp"
#include "catsafe/study.hpp"

namespace catsafe::cli {

namespace {

constexpr int kOk = 0;
constexpr int kInternal = 1;
constexpr int kInvalid = 2;

std::string hex64(std::uint64_t v) {
    std::ostringstream o;
    o << std::hex << std::setw(16) << std::setfill('0') << v;
    return o.str();
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path);
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return "fnv1a64:" + hex64(fnv1a(bytes));
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream o;
    o << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return o.str();
}

struct Manifest {
    std::vector<std::string> command_line;
    std::string config_text;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> inputs; // path, digest
    std::vector<std::string> outputs;

    void write(const std::filesystem::path& path) const {
        nlohmann::ordered_json j;
        j["command_line"] = command_line;
        j["config"] = config_text;
        j["config_digest"] = "fnv1a64:" + hex64(fnv1a(config_text));
        j["seed"] = seed;
        j["version"] = kVersion;
        auto& in = j["inputs"] = nlohmann::ordered_json::array();
        for (const auto& [p, d] : inputs) in.push_back({{"path", p}, {"digest", d}});
        j["outputs"] = outputs;
        j["timestamp"] = utc_timestamp();
        std::ofstream f(path);
        if (!f) throw InputError("cannot write " + path.string());
        f << j.dump(2) << '\n';
    }
};

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write " + path.string());
    f << text;
}

struct TestArgs {
    std::string matrix, response, response_kind = "two-group", gmt;
    std::string local = "pooled-t";
    double s0 = 0.0;
    std::string global = "wilcoxon";
    std::string method = "class1";
    std::size_t B = 1000;
    std::uint64_t seed = 1;
    double alpha = 0.05;
    std::string region;
    std::size_t min_size = 5;
    std::size_t threads = 0;
    std::string out = "results.csv";
    std::string manifest;
    std::string tail = "upper";
    std::string wilcoxon = "auto";
    bool rank_absolute = false;
    bool unpooled = false;
};

int cmd_test(const TestArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
    const auto matrix = parse_expression_matrix(a.matrix);
    const auto response = parse_response(a.response, parse_response_kind(a.response_kind), matrix.array_ids());
    const auto gmt = parse_gmt(a.gmt);
    const auto aligned = align_and_filter(gmt.sets, matrix, a.min_size);

    PipelineOptions o;
    o.method = parse_test_method(a.method);
    o.local = LocalStatKind::parse(a.local, a.s0);
    o.spec.kind = parse_global_kind(a.global);
    o.spec.rank_absolute = a.rank_absolute;
    o.spec.unpooled_pearson = a.unpooled;
    if (o.spec.categorical()) {
        o.spec.region = a.region.empty() ? RejectionRegion::upper_tail(student_t_quantile(
                                               0.95, static_cast<double>(matrix.arrays()) - 2.0))
                                         : RejectionRegion::parse(a.region);
    } else if (!a.region.empty()) {
        throw InputError("--region applies only to the fisher and pearson global statistics");
    }
    o.B = a.B;
    o.seed = a.seed;
    o.alpha = a.alpha;
    o.threads = a.threads;
    if (a.tail == "upper") o.tail = Tail::Upper;
    else if (a.tail == "lower") o.tail = Tail::Lower;
    else throw InputError("--tail must be upper or lower");
    if (a.wilcoxon == "auto") o.class1.wilcoxon = WilcoxonMode::Auto;
    else if (a.wilcoxon == "exact") o.class1.wilcoxon = WilcoxonMode::Exact;
    else if (a.wilcoxon == "normal") o.class1.wilcoxon = WilcoxonMode::Normal;
    else throw InputError("--wilcoxon must be auto, exact or normal");
    validate_pipeline(o);

    const auto rows = run_pipeline(matrix, response, aligned.categories, o);
    std::ostringstream csv;
    write_pipeline_csv(csv, rows);
    write_text(a.out, csv.str());

    std::ostringstream cfg;
    cfg << "method=" << a.method << "\nglobal=" << a.global << "\nlocal=" << o.local.to_string()
        << "\nregion=" << (o.spec.region ? o.spec.region->to_string() : "") << "\nB=" << a.B << "\nseed=" << a.seed
        << "\nalpha=" << format_double(a.alpha) << "\nmin_size=" << a.min_size << "\ntail=" << a.tail
        << "\nwilcoxon=" << a.wilcoxon << "\nrank_absolute=" << a.rank_absolute << "\nunpooled=" << a.unpooled
        << "\nresponse_kind=" << a.response_kind << '\n';
    Manifest man{argv, cfg.str(), a.seed, {}, {a.out}};
    man.inputs = {{a.matrix, file_digest(a.matrix)}, {a.response, file_digest(a.response)}, {a.gmt, file_digest(a.gmt)}};
    man.write(a.manifest.empty() ? a.out + ".manifest.json" : a.manifest);

    out << "tested " << rows.size() << " categories (" << aligned.report.dropped_too_small + aligned.report.dropped_too_large
        << " dropped by size); results in " << a.out << '\n';
    return kOk;
}

struct SimArgs {
    std::string config;
    std::string out = "study_out";
    std::string scenario;
    std::string tests;
    std::optional<std::size_t> nrep, B;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> threads;
    bool paper_scale = false;
    std::vector<std::string> sets;
};

int cmd_simulate(const std::string& study, const SimArgs& a, const std::vector<std::string>& argv, std::ostream& out,
                 std::ostream& err) {
    StudyConfig cfg = a.config.empty() ? StudyConfig{} : StudyConfig::load(a.config);
    if (!a.scenario.empty()) cfg.set("scenario", a.scenario);
    if (!a.tests.empty()) cfg.set("tests", a.tests);
    if (a.nrep) cfg.nrep = *a.nrep;
    if (a.B) cfg.B = *a.B;
    if (a.seed) cfg.seed = *a.seed;
    if (a.threads) cfg.threads = *a.threads;
    for (const auto& kv : a.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw InputError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (a.paper_scale) {
        cfg.paper_scale = true;
        cfg.apply_paper_scale();
    }
    if (cfg.paper_scale) {
        err << "warning: full-size runs take many CPU hours\n";
    }
    StudyReport report;
    if (study == "corr-map") {
        if (cfg.rho_grid.empty()) {
            for (int k = -9; k <= 9; ++k) cfg.rho_grid.push_back(k / 10.0);
        }
        report = run_correlation_map(cfg);
    } else {
        if (cfg.tests.empty()) throw InputError("no tests configured (use --tests or tests=...)");
        report = study == "power" ? run_power_study(cfg) : run_calibration_study(cfg);
    }
    const std::filesystem::path dir(a.out);
    report.write_all(dir);
    Manifest man{argv, report.config_text, cfg.seed, {}, {}};
    if (!a.config.empty()) man.inputs.emplace_back(a.config, file_digest(a.config));
    if (!cfg.matrix_path.empty()) man.inputs.emplace_back(cfg.matrix_path, file_digest(cfg.matrix_path));
    if (!cfg.gmt_path.empty()) man.inputs.emplace_back(cfg.gmt_path, file_digest(cfg.gmt_path));
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.path().filename() != "manifest.json") man.outputs.push_back(e.path().filename().string());
    }
    std::sort(man.outputs.begin(), man.outputs.end());
    man.write(dir / "manifest.json");
    report.write_csv(out);
    return kOk;
}

std::string fixed(double v, int digits) {
    std::ostringstream o;
    o << std::fixed << std::setprecision(digits) << v;
    return o.str();
}

std::string general(double v, int digits) {
    std::ostringstream o;
    o << std::setprecision(digits) << v;
    return o.str();
}

} // namespace

int run(int argc, const char* const* argv) { return run(argc, argv, std::cout, std::cerr); }

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    const std::vector<std::string> args(argv, argv + argc);
    CLI::App app{"Gene category tests with local and global statistics"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    TestArgs t;
    auto* test = app.add_subcommand("test", "Test every category of a GMT file against its complement");
    test->set_config("--config", "", "Flat key=value file supplying option defaults");
    test->add_option("--matrix", t.matrix, "Expression matrix (TSV, genes x arrays)")->required();
    test->add_option("--response", t.response, "Response table (array_id, label | time, event)")->required();
    test->add_option("--response-kind", t.response_kind, "two-group | multi-group | survival");
    test->add_option("--gmt", t.gmt, "Gene sets in GMT format")->required();
    test->add_option("--local", t.local, "pooled-t | sam-t | log-fold-change | anova-f | cox-wald");
    test->add_option("--s0", t.s0, "SAM denominator constant");
    test->add_option("--global", t.global, "fisher | pearson | avgdiff | wilcoxon");
    test->add_option("--method", t.method, "class1 | gene-perm | array-perm | boot-q | boot-t");
    test->add_option("--B", t.B, "Resamples");
    test->add_option("--seed", t.seed, "Master seed");
    test->add_option("--alpha", t.alpha, "Level for the Bonferroni count");
    test->add_option("--region", t.region, "Rejection region: upper:<t>, two-sided:<t> or top:<R>");
    test->add_option("--min-size", t.min_size, "Smallest category (and complement) kept");
    test->add_option("--threads", t.threads, "Worker threads (default CATSAFE_THREADS or all cores)");
    test->add_option("--out", t.out, "Results CSV");
    test->add_option("--manifest", t.manifest, "Run manifest (default <out>.manifest.json)");
    test->add_option("--tail", t.tail, "upper (more DE in the category) or lower");
    test->add_option("--wilcoxon", t.wilcoxon, "Class 1 rank-sum p-value: auto | exact | normal");
    test->add_flag("--rank-abs", t.rank_absolute, "Rank |t| in the rank-sum statistic");
    test->add_flag("--unpooled", t.unpooled, "Unpooled standard error for the proportion difference");

    SimArgs s;
    auto* sim = app.add_subcommand("simulate", "Monte Carlo calibration, power and correlation studies");
    sim->require_subcommand(1);
    std::string study;
    for (const char* name : {"calibration", "power", "corr-map"}) {
        auto* sub = sim->add_subcommand(name, std::string("Run the ") + name + " study");
        sub->add_option("--config", s.config, "Study config (key=value, version=1)");
        sub->add_option("--out", s.out, "Output directory");
        sub->add_option("--scenario", s.scenario, "class1 | class3 | corr-map");
        sub->add_option("--tests", s.tests, "Comma-separated tests such as class1-wilcoxon,array-perm-avgdiff");
        sub->add_option("--nrep", s.nrep, "Replicates");
        sub->add_option("--B", s.B, "Permutation resamples");
        sub->add_option("--seed", s.seed, "Master seed");
        sub->add_option("--threads", s.threads, "Worker threads");
        sub->add_flag("--paper-scale", s.paper_scale, "Use the full published scale");
        sub->add_option("--set", s.sets, "Extra key=value config assignments");
        sub->callback([&study, name] { study = name; });
    }

    auto* ana = app.add_subcommand("analytic", "Closed-form variance and probability checks");
    ana->require_subcommand(1);
    double x = 0.0, y = 0.0, rho = 0.0;
    auto* bvn = ana->add_subcommand("bvn", "Standard bivariate normal CDF");
    bvn->add_option("--x", x)->required();
    bvn->add_option("--y", y)->required();
    bvn->add_option("--rho", rho)->required();

    GridSpec grid;
    auto* lemma = ana->add_subcommand("lemma-b2", "Grid scan of Phi2(x, y; rho) - Phi(x) Phi(y)");
    lemma->add_option("--rho", rho)->required();
    lemma->add_option("--lo", grid.lo);
    lemma->add_option("--hi", grid.hi);
    lemma->add_option("--step", grid.step);

    std::size_t m = 12, m_c = 4;
    double rho_c = 0.0, rho_cbar = 0.0, rho_cross = 0.0;
    auto* infl = ana->add_subcommand("var-inflation", "Variance inflation of the mean difference");
    infl->add_option("--m", m)->required();
    infl->add_option("--m-c", m_c)->required();
    infl->add_option("--rho-c", rho_c);
    infl->add_option("--rho-cbar", rho_cbar);
    infl->add_option("--rho-cross", rho_cross);

    double delta_c = 0.0, delta_cbar = 0.0;
    bool force = false;
    auto* wvar = ana->add_subcommand("wilcoxon-var", "Rank-sum variance under block-correlated normal statistics");
    wvar->add_option("--m", m);
    wvar->add_option("--m-c", m_c);
    wvar->add_option("--rho-c", rho_c, "Correlation within the category");
    wvar->add_option("--rho-cbar", rho_cbar, "Correlation within the complement");
    wvar->add_option("--rho-cross", rho_cross, "Correlation across the cut");
    wvar->add_option("--delta-c", delta_c, "Mean of statistics in the category");
    wvar->add_option("--delta-cbar", delta_cbar, "Mean of statistics in the complement");
    wvar->add_flag("--force", force, "Allow more than 1e6 terms");

    Theorem2Config t2;
    auto* th2 = ana->add_subcommand("theorem2-check", "Equal means maximize the rank-sum variance");
    th2->add_option("--m", t2.m);
    th2->add_option("--m-c", t2.m_c);
    th2->add_option("--rho-within", t2.rho_within);
    th2->add_option("--rho-cross", t2.rho_cross);
    th2->add_option("--ds", t2.ds)->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kInvalid;
    }

    try {
        if (test->parsed()) return cmd_test(t, args, out);
        if (sim->parsed()) return cmd_simulate(study, s, args, out, err);
        if (bvn->parsed()) {
            out << fixed(bvn_cdf(x, y, rho), 10) << '\n';
        } else if (lemma->parsed()) {
            const auto g = lemma_b2_scan(rho, grid);
            out << (rho < 0 ? "argmin" : "argmax") << " (" << general(g.extremum_x(), 6) << ','
                << general(g.extremum_y(), 6) << ")\n";
            out << "value " << general(g.extremum_value(), 6) << '\n';
            out << "f(0,0) " << general(g.f_origin, 12) << '\n';
            out << "asin(rho)/(2pi) " << general(g.closed_form, 12) << '\n';
            out << "points " << g.points << '\n';
        } else if (infl->parsed()) {
            if (m_c < 1 || m_c >= m) throw InputError("need 1 <= m-c < m");
            CorrelationSummary cs;
            cs.m_c = m_c;
            cs.m_cbar = m - m_c;
            if (m_c > 1) cs.rho_c = rho_c;
            cs.rho_cbar = rho_cbar;
            cs.rho_cross = rho_cross;
            const auto v = var_inflation_avgdiff(cs);
            out << "exact " << general(v.exact, 12) << "\napprox " << general(v.approx, 12) << '\n';
        } else if (wvar->parsed()) {
            if (m_c < 1 || m_c >= m) throw InputError("need 1 <= m-c < m");
            Eigen::MatrixXd corr(m, m);
            std::vector<double> delta(m, delta_cbar);
            std::vector<std::size_t> members(m_c);
            for (std::size_t i = 0; i < m_c; ++i) {
                members[i] = i;
                delta[i] = delta_c;
            }
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t h = 0; h < m; ++h) {
                    const bool ci = i < m_c, ch = h < m_c;
                    corr(i, h) = i == h ? 1.0 : ci && ch ? rho_c : !ci && !ch ? rho_cbar : rho_cross;
                }
            }
            WilcoxonVarOptions wo;
            wo.force = force;
            const double v = wilcoxon_var_correlated(delta, corr, members, wo);
            const double iid = static_cast<double>(m_c * (m - m_c) * (m + 1)) / 12.0;
            out << "variance " << general(v, 12) << "\niid " << general(iid, 12) << "\nratio "
                << general(v / iid, 12) << '\n';
        } else if (th2->parsed()) {
            const auto r = theorem2_check(t2);
            out << "correlation_dominant " << (r.correlation_dominant ? "yes" : "no") << '\n';
            out << "equal_means_variance " << general(r.equal_variance, 12) << '\n';
            out << "d,de_in_c,de_in_cbar,variance,margin\n";
            for (const auto& c : r.cases) {
                out << general(c.d, 6) << ',' << c.de_in_c << ',' << c.de_in_cbar << ',' << general(c.variance, 12)
                    << ',' << general(c.margin, 6) << '\n';
            }
            out << (r.passed ? "PASS" : "FAIL") << '\n';
        }
        return kOk;
    } catch (const InputError& e) {
        err << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const DegenerateError& e) {
        err << "error: " << e.what() << '\n';
        return kInvalid;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternal;
    }
}

} // namespace catsafe::cli
