#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "catsafe/types.hpp"

namespace catsafe {

struct MatrixReadOptions {
    char delimiter = '\t';
    /// First line holds array ids (its first cell is ignored). Without a
    /// header, arrays are named A1..An.
    bool header = true;
};

/// Reads a genes x arrays table. The first column holds gene ids; every other
/// cell must be a finite real. Errors carry 1-based data coordinates.
ExpressionMatrix parse_expression_matrix(const std::filesystem::path& path, const MatrixReadOptions& options = {});
ExpressionMatrix parse_expression_matrix(std::istream& in, const MatrixReadOptions& options = {});

/// Writes the matrix in the format read by parse_expression_matrix, using
/// shortest round-trip formatting for values.
void write_expression_matrix(std::ostream& out, const ExpressionMatrix& matrix);

struct RawGeneSet {
    std::string name;
    std::string description;
    std::vector<std::string> genes; // first-occurrence order, deduplicated
    std::size_t duplicates = 0;      // repeated symbols dropped from this line
};

struct GmtContents {
    std::vector<RawGeneSet> sets;
    std::size_t duplicate_symbols = 0;
};

GmtContents parse_gmt(const std::filesystem::path& path);
GmtContents parse_gmt(std::istream& in);

/// Reads (array_id, label) or (array_id, time, event) rows and reorders them to
/// `array_order`. Rows for arrays outside `array_order` are ignored. Blank
/// lines, '#' lines, and a leading "array_id" header line are skipped.
Response parse_response(const std::filesystem::path& path, ResponseKind kind,
                        std::span<const std::string> array_order);
Response parse_response(std::istream& in, ResponseKind kind, std::span<const std::string> array_order);

struct AlignmentReport {
    std::size_t input_sets = 0;
    std::size_t unresolved_symbols = 0;
    std::size_t dropped_too_small = 0;
    std::size_t dropped_too_large = 0;
};

struct AlignedCategories {
    CategoryCollection categories;
    AlignmentReport report;
};

/// Resolves symbols to matrix rows, dropping unknown symbols, then keeps the
/// sets with min_size <= m_C <= m - min_size. Throws InputError if none remain.
AlignedCategories align_and_filter(std::span<const RawGeneSet> sets, const ExpressionMatrix& matrix,
                                   std::size_t min_size = 5);

/// Inverse of alignment: member indices back to gene symbols.
std::vector<RawGeneSet> to_raw_sets(const CategoryCollection& categories, const ExpressionMatrix& matrix);

/// Shortest representation that parses back to the same double.
std::string format_double(double value);

} // namespace catsafe
