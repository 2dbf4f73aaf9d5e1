#include "catsafe/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "catsafe/io.hpp"
#include "catsafe/types.hpp"

namespace catsafe {

KsResult ks_uniform(std::span<const double> values) {
    if (values.empty()) throw InputError("KS test needs at least one value");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    double d = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        const double x = std::clamp(v[k], 0.0, 1.0);
        d = std::max({d, (static_cast<double>(k) + 1.0) / n - x, x - static_cast<double>(k) / n});
    }
    const double sn = std::sqrt(n);
    const double lambda = (sn + 0.12 + 0.11 / sn) * d;
    double q = 0.0;
    if (lambda < 0.2) {
        q = 1.0;
    } else {
        double sign = 1.0;
        for (int k = 1; k <= 100; ++k) {
            const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
            q += term;
            if (std::abs(term) < 1e-16) break;
            sign = -sign;
        }
        q = std::clamp(2.0 * q, 0.0, 1.0);
    }
    return {d, q};
}

std::vector<double> ecdf_points() {
    std::vector<double> pts;
    for (int decade = -4; decade < 0; ++decade) {
        for (int k = 1; k <= 9; ++k) pts.push_back(k * std::pow(10.0, decade));
    }
    pts.push_back(1.0);
    return pts;
}

const TestSummaryRow* StudyReport::find(const std::string& test, double alpha, std::optional<double> grid) const {
    for (const auto& r : rows) {
        if (r.test != test || std::abs(r.alpha - alpha) > 1e-12) continue;
        if (grid.has_value() != r.grid.has_value()) continue;
        if (grid && std::abs(*grid - *r.grid) > 1e-12) continue;
        return &r;
    }
    return nullptr;
}

void StudyReport::write_csv(std::ostream& out) const {
    out << "#catsafe-report v1\n";
    if (study == "corr-map") {
        out << "local,rho_x,median,q05,q95\n";
        for (const auto& r : corr_rows) {
            out << r.local << ',' << format_double(r.rho_x) << ',' << format_double(r.median) << ','
                << format_double(r.q05) << ',' << format_double(r.q95) << '\n';
        }
        return;
    }
    out << "test,alpha,grid,n_pvalues,rejections,realized,ratio,fwer,min_p\n";
    for (const auto& r : rows) {
        out << r.test << ',' << format_double(r.alpha) << ',' << (r.grid ? format_double(*r.grid) : "") << ','
            << r.n_pvalues << ',' << r.rejections << ',' << format_double(r.realized) << ','
            << format_double(r.ratio) << ',' << format_double(r.fwer) << ',' << format_double(r.min_p) << '\n';
    }
}

void StudyReport::write_json(std::ostream& out) const {
    nlohmann::ordered_json j;
    j["format"] = "catsafe-report v1";
    j["study"] = study;
    j["scenario"] = scenario;
    j["config"] = config_text;
    auto& jr = j["rows"] = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json e;
        e["test"] = r.test;
        e["alpha"] = r.alpha;
        if (r.grid) e["grid"] = *r.grid;
        e["n_pvalues"] = r.n_pvalues;
        e["rejections"] = r.rejections;
        e["realized"] = r.realized;
        e["ratio"] = r.ratio;
        e["fwer"] = r.fwer;
        e["min_p"] = r.min_p;
        jr.push_back(e);
    }
    auto& jk = j["ks"] = nlohmann::ordered_json::object();
    for (const auto& [test, p] : pooled) {
        if (p.empty()) continue;
        const auto ks = ks_uniform(p);
        jk[test] = {{"statistic", ks.statistic}, {"p_value", ks.p_value}};
    }
    auto& jm = j["moments"] = nlohmann::ordered_json::array();
    for (const auto& m : moments) {
        jm.push_back({{"category", m.category}, {"m_c", m.m_c}, {"theta0", m.theta0},
                      {"replicates", m.replicates}, {"mean", m.mean}, {"se", m.se}});
    }
    if (!corr_rows.empty()) {
        auto& jc = j["corr_map"] = nlohmann::ordered_json::array();
        for (const auto& r : corr_rows) {
            jc.push_back({{"local", r.local}, {"rho_x", r.rho_x}, {"median", r.median}, {"q05", r.q05},
                          {"q95", r.q95}});
        }
        auto& jf = j["corr_fits"] = nlohmann::ordered_json::array();
        for (const auto& f : corr_fits) {
            jf.push_back({{"local", f.local}, {"slope", f.slope}, {"intercept", f.intercept}});
        }
    }
    out << j.dump(2) << '\n';
}

void StudyReport::write_ecdf(std::ostream& out, const std::string& test) const {
    const auto it = pooled.find(test);
    if (it == pooled.end()) throw InputError("no pooled p-values for test " + test);
    std::vector<double> p = it->second;
    std::sort(p.begin(), p.end());
    out << "x,ecdf\n";
    for (double x : ecdf_points()) {
        const auto count = std::upper_bound(p.begin(), p.end(), x) - p.begin();
        out << format_double(x) << ',' << format_double(static_cast<double>(count) / static_cast<double>(p.size()))
            << '\n';
    }
}

void StudyReport::write_moments(std::ostream& out) const {
    out << "category,m_c,theta0,replicates,mean,se,z\n";
    for (const auto& m : moments) {
        const double z = m.se > 0.0 ? (m.mean - m.theta0) / m.se : 0.0;
        out << m.category << ',' << m.m_c << ',' << format_double(m.theta0) << ',' << m.replicates << ','
            << format_double(m.mean) << ',' << format_double(m.se) << ',' << format_double(z) << '\n';
    }
}

void StudyReport::write_all(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    auto open = [&](const std::string& name) {
        std::ofstream f(dir / name);
        if (!f) throw InputError("cannot write " + (dir / name).string());
        return f;
    };
    {
        auto f = open("report.csv");
        write_csv(f);
    }
    {
        auto f = open("summary.json");
        write_json(f);
    }
    for (const auto& [test, p] : pooled) {
        if (p.empty()) continue;
        auto f = open("ecdf_" + test + ".csv");
        write_ecdf(f, test);
    }
    if (!moments.empty()) {
        auto f = open("moments.csv");
        write_moments(f);
    }
}

} // namespace catsafe
