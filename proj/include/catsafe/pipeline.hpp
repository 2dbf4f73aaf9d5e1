#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "catsafe/class1.hpp"
#include "catsafe/global_stats.hpp"
#include "catsafe/local_stats.hpp"
#include "catsafe/study.hpp"
#include "catsafe/types.hpp"

namespace catsafe {

struct PipelineOptions {
    TestMethod method = TestMethod::Class1;
    GlobalStatSpec spec;
    LocalStatKind local = LocalStatKind::pooled_t();
    std::size_t B = 1000;
    std::uint64_t seed = 1;
    std::size_t threads = 0;
    double alpha = 0.05;
    Class1Options class1;
    Tail tail = Tail::Upper;
};

struct PipelineRow {
    std::string category;
    std::size_t m_c = 0;
    double u_obs = 0.0;
    std::optional<double> theta0;
    double p = 1.0;
    double bonferroni_p = 1.0;
    std::string method;
    std::string diagnostics;
};

/// Throws InputError for combinations without a valid test (e.g. a bootstrap
/// pivot on the Fisher count).
void validate_pipeline(const PipelineOptions& options);

/// Tests every category and returns rows sorted by p (then by name).
std::vector<PipelineRow> run_pipeline(const ExpressionMatrix& matrix, const Response& response,
                                      const CategoryCollection& categories, const PipelineOptions& options);

/// "#catsafe-report v1", a header line, then one row per category.
void write_pipeline_csv(std::ostream& out, const std::vector<PipelineRow>& rows);

} // namespace catsafe
