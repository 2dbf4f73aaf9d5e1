#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace catsafe {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user input: files, flags, or incompatible option combinations.
class InputError : public Error {
public:
    using Error::Error;
};

class ParseError : public InputError {
public:
    ParseError(const std::string& what, std::size_t row, std::size_t column)
        : InputError(what), row_(row), column_(column) {}

    /// 1-based data row (or file line for line-oriented formats); 0 if not applicable.
    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

/// A gene whose local statistic is undefined (e.g. zero within-group variance
/// with a nonzero mean difference).
class DegenerateError : public Error {
public:
    DegenerateError(const std::string& what, std::vector<std::size_t> genes)
        : Error(what), genes_(std::move(genes)) {}
    const std::vector<std::size_t>& genes() const noexcept { return genes_; }

private:
    std::vector<std::size_t> genes_;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// m x n expression values, row-major: value(i, j) is gene i on array j.
class ExpressionMatrix {
public:
    ExpressionMatrix() = default;
    ExpressionMatrix(std::vector<std::string> gene_ids, std::vector<std::string> array_ids,
                     std::vector<double> values);

    std::size_t genes() const noexcept { return gene_ids_.size(); }
    std::size_t arrays() const noexcept { return array_ids_.size(); }

    double operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * arrays() + j]; }
    std::span<const double> row(std::size_t i) const noexcept {
        return {values_.data() + i * arrays(), arrays()};
    }

    const std::vector<std::string>& gene_ids() const noexcept { return gene_ids_; }
    const std::vector<std::string>& array_ids() const noexcept { return array_ids_; }
    const std::vector<double>& values() const noexcept { return values_; }

    std::optional<std::size_t> gene_index(std::string_view id) const;

private:
    std::vector<std::string> gene_ids_;
    std::vector<std::string> array_ids_;
    std::vector<double> values_;
    std::unordered_map<std::string, std::size_t> gene_lookup_;
};

enum class ResponseKind { TwoGroup, MultiGroup, Survival };

std::string_view to_string(ResponseKind kind);
ResponseKind parse_response_kind(std::string_view text);

/// Per-array outcome. Group labels are 1-based codes.
class Response {
public:
    static Response two_group(std::vector<int> labels);
    static Response multi_group(std::vector<int> labels);
    static Response survival(std::vector<double> times, std::vector<int> events);

    ResponseKind kind() const noexcept { return kind_; }
    std::size_t size() const noexcept { return kind_ == ResponseKind::Survival ? times_.size() : labels_.size(); }

    const std::vector<int>& labels() const noexcept { return labels_; }
    const std::vector<double>& times() const noexcept { return times_; }
    const std::vector<int>& events() const noexcept { return events_; }

    /// Number of groups k (2 for TwoGroup); 0 for survival.
    std::size_t groups() const noexcept { return groups_; }
    std::size_t group_size(int label) const;
    std::size_t event_count() const;

    /// True when every array carries the same outcome, so permuting it is a no-op.
    bool is_constant() const;

private:
    Response() = default;

    ResponseKind kind_ = ResponseKind::TwoGroup;
    std::vector<int> labels_;
    std::vector<double> times_;
    std::vector<int> events_;
    std::size_t groups_ = 0;
};

struct Category {
    std::string name;
    std::string description;
    std::vector<std::size_t> members; // sorted, unique row indices
};

using CategoryCollection = std::vector<Category>;

/// Sorted complement of `members` within {0..m-1}.
std::vector<std::size_t> complement(std::span<const std::size_t> members, std::size_t m);

struct RejectionRegion {
    enum class Kind { UpperTail, TwoSided, TopR };

    Kind kind = Kind::UpperTail;
    double threshold = 0.0;
    std::size_t count = 0;

    static RejectionRegion upper_tail(double threshold) { return {Kind::UpperTail, threshold, 0}; }
    static RejectionRegion two_sided(double threshold) { return {Kind::TwoSided, threshold, 0}; }
    static RejectionRegion top(std::size_t count) { return {Kind::TopR, 0.0, count}; }

    /// Validates against m genes; throws InputError.
    void validate(std::size_t m) const;

    /// "upper:1.66", "two-sided:2", "top:100"
    static RejectionRegion parse(std::string_view text);
    std::string to_string() const;
};

} // namespace catsafe
