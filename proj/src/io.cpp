#include "catsafe/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "catsafe/rng.hpp"

namespace catsafe {

// ---------------------------------------------------------------------------
// Core types

ExpressionMatrix::ExpressionMatrix(std::vector<std::string> gene_ids, std::vector<std::string> array_ids,
                                   std::vector<double> values)
    : gene_ids_(std::move(gene_ids)), array_ids_(std::move(array_ids)), values_(std::move(values)) {
    if (gene_ids_.size() < 2 || array_ids_.size() < 2) {
        throw InputError("expression matrix needs at least 2 genes and 2 arrays (got " +
                         std::to_string(gene_ids_.size()) + " x " + std::to_string(array_ids_.size()) + ")");
    }
    if (values_.size() != gene_ids_.size() * array_ids_.size()) {
        throw InputError("expression matrix value count does not match its dimensions");
    }
    gene_lookup_.reserve(gene_ids_.size());
    for (std::size_t i = 0; i < gene_ids_.size(); ++i) {
        if (!gene_lookup_.emplace(gene_ids_[i], i).second) {
            throw InputError("duplicate gene id '" + gene_ids_[i] + "'");
        }
    }
    std::unordered_set<std::string_view> seen;
    for (const auto& a : array_ids_) {
        if (!seen.insert(a).second) {
            throw InputError("duplicate array id '" + a + "'");
        }
    }
    for (std::size_t k = 0; k < values_.size(); ++k) {
        if (!std::isfinite(values_[k])) {
            throw ParseError("non-finite expression value", k / array_ids_.size() + 1, k % array_ids_.size() + 1);
        }
    }
}

std::optional<std::size_t> ExpressionMatrix::gene_index(std::string_view id) const {
    auto it = gene_lookup_.find(std::string(id));
    if (it == gene_lookup_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::string_view to_string(ResponseKind kind) {
    switch (kind) {
    case ResponseKind::TwoGroup: return "two-group";
    case ResponseKind::MultiGroup: return "multi-group";
    case ResponseKind::Survival: return "survival";
    }
    return "?";
}

ResponseKind parse_response_kind(std::string_view text) {
    if (text == "two-group") return ResponseKind::TwoGroup;
    if (text == "multi-group") return ResponseKind::MultiGroup;
    if (text == "survival") return ResponseKind::Survival;
    throw InputError("unknown response kind '" + std::string(text) + "'");
}

Response Response::two_group(std::vector<int> labels) {
    Response r;
    r.kind_ = ResponseKind::TwoGroup;
    r.groups_ = 2;
    for (int v : labels) {
        if (v != 1 && v != 2) {
            throw InputError("unknown two-group label " + std::to_string(v) + " (expected 1 or 2)");
        }
    }
    r.labels_ = std::move(labels);
    if (r.group_size(1) == 0 || r.group_size(2) == 0) {
        throw InputError("two-group response needs at least one array in each group");
    }
    return r;
}

Response Response::multi_group(std::vector<int> labels) {
    Response r;
    r.kind_ = ResponseKind::MultiGroup;
    int k = 0;
    for (int v : labels) {
        if (v < 1) {
            throw InputError("unknown group label " + std::to_string(v) + " (expected 1..k)");
        }
        k = std::max(k, v);
    }
    r.labels_ = std::move(labels);
    r.groups_ = static_cast<std::size_t>(k);
    if (k < 2) {
        throw InputError("multi-group response needs at least two groups");
    }
    for (int g = 1; g <= k; ++g) {
        if (r.group_size(g) == 0) {
            throw InputError("group " + std::to_string(g) + " has no arrays");
        }
    }
    return r;
}

Response Response::survival(std::vector<double> times, std::vector<int> events) {
    if (times.size() != events.size()) {
        throw InputError("survival times and events differ in length");
    }
    for (double t : times) {
        if (!(t > 0.0) || !std::isfinite(t)) {
            throw InputError("survival time must be positive and finite");
        }
    }
    for (int e : events) {
        if (e != 0 && e != 1) {
            throw InputError("event indicator must be 0 or 1");
        }
    }
    Response r;
    r.kind_ = ResponseKind::Survival;
    r.times_ = std::move(times);
    r.events_ = std::move(events);
    if (r.event_count() == 0) {
        throw InputError("survival response has no events");
    }
    return r;
}

std::size_t Response::group_size(int label) const {
    return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), label));
}

std::size_t Response::event_count() const {
    return static_cast<std::size_t>(std::count(events_.begin(), events_.end(), 1));
}

bool Response::is_constant() const {
    if (kind_ == ResponseKind::Survival) {
        for (std::size_t j = 1; j < times_.size(); ++j) {
            if (times_[j] != times_[0] || events_[j] != events_[0]) {
                return false;
            }
        }
        return true;
    }
    return std::adjacent_find(labels_.begin(), labels_.end(), std::not_equal_to<>()) == labels_.end();
}

std::vector<std::size_t> complement(std::span<const std::size_t> members, std::size_t m) {
    std::vector<std::size_t> out;
    out.reserve(m - std::min(m, members.size()));
    std::size_t k = 0;
    for (std::size_t i = 0; i < m; ++i) {
        if (k < members.size() && members[k] == i) {
            ++k;
        } else {
            out.push_back(i);
        }
    }
    return out;
}

void RejectionRegion::validate(std::size_t m) const {
    if (kind == Kind::TopR) {
        if (count < 1 || count > m - 1) {
            throw InputError("top-R region needs 1 <= R <= m-1");
        }
    } else if (!std::isfinite(threshold)) {
        throw InputError("rejection threshold must be finite");
    }
}

RejectionRegion RejectionRegion::parse(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) {
        throw InputError("rejection region must look like upper:T, two-sided:T or top:R");
    }
    const auto head = text.substr(0, colon);
    const std::string tail(text.substr(colon + 1));
    try {
        std::size_t used = 0;
        if (head == "top") {
            const long long r = std::stoll(tail, &used);
            if (used != tail.size() || r < 1) throw std::invalid_argument("count");
            return top(static_cast<std::size_t>(r));
        }
        const double t = std::stod(tail, &used);
        if (used != tail.size()) throw std::invalid_argument("threshold");
        if (head == "upper") return upper_tail(t);
        if (head == "two-sided") return two_sided(t);
    } catch (const std::logic_error&) {
        throw InputError("malformed rejection region '" + std::string(text) + "'");
    }
    throw InputError("unknown rejection region kind '" + std::string(head) + "'");
}

std::string RejectionRegion::to_string() const {
    switch (kind) {
    case Kind::UpperTail: return "upper:" + format_double(threshold);
    case Kind::TwoSided: return "two-sided:" + format_double(threshold);
    case Kind::TopR: return "top:" + std::to_string(count);
    }
    return "?";
}

std::vector<std::size_t> random_subset(std::size_t n, std::size_t k, CounterRng& rng) {
    // Partial Fisher-Yates over an index table.
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + rng.below(n - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

// ---------------------------------------------------------------------------
// Text helpers

namespace {

std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delim, start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

bool read_line(std::istream& in, std::string& line) {
    if (!std::getline(in, line)) {
        return false;
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    return true;
}

bool parse_real(std::string_view text, double& out) {
    if (!text.empty() && text.front() == '+') {
        text.remove_prefix(1);
    }
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open '" + path.string() + "'");
    }
    return in;
}

bool skippable(std::string_view line) {
    return line.empty() || line.front() == '#';
}

} // namespace

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------
// Expression matrix

ExpressionMatrix parse_expression_matrix(const std::filesystem::path& path, const MatrixReadOptions& options) {
    auto in = open_input(path);
    return parse_expression_matrix(in, options);
}

ExpressionMatrix parse_expression_matrix(std::istream& in, const MatrixReadOptions& options) {
    std::string line;
    std::vector<std::string> array_ids;
    std::vector<std::string> gene_ids;
    std::vector<double> values;
    std::size_t width = 0;
    std::size_t line_no = 0;
    bool have_header = !options.header;

    while (read_line(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        auto fields = split(line, options.delimiter);
        if (!have_header) {
            if (fields.size() < 2) {
                throw ParseError("header line has no array columns", 0, 0);
            }
            for (std::size_t c = 1; c < fields.size(); ++c) {
                array_ids.emplace_back(fields[c]);
            }
            width = array_ids.size();
            have_header = true;
            continue;
        }
        if (width == 0) {
            width = fields.size() - 1;
            for (std::size_t c = 1; c <= width; ++c) {
                array_ids.push_back("A" + std::to_string(c));
            }
        }
        const std::size_t row = gene_ids.size() + 1;
        if (fields.size() != width + 1) {
            throw ParseError("ragged row " + std::to_string(row) + " (line " + std::to_string(line_no) + "): expected " +
                                 std::to_string(width) + " values, found " + std::to_string(fields.size() - 1),
                             row, 0);
        }
        gene_ids.emplace_back(fields[0]);
        for (std::size_t c = 1; c < fields.size(); ++c) {
            double v = 0.0;
            if (!parse_real(fields[c], v)) {
                throw ParseError("non-numeric value '" + std::string(fields[c]) + "' at row " + std::to_string(row) +
                                     ", column " + std::to_string(c) + " (line " + std::to_string(line_no) + ")",
                                 row, c);
            }
            values.push_back(v);
        }
    }
    // Duplicate ids, dimension checks.
    return ExpressionMatrix(std::move(gene_ids), std::move(array_ids), std::move(values));
}

void write_expression_matrix(std::ostream& out, const ExpressionMatrix& matrix) {
    out << "gene";
    for (const auto& a : matrix.array_ids()) {
        out << '\t' << a;
    }
    out << '\n';
    for (std::size_t i = 0; i < matrix.genes(); ++i) {
        out << matrix.gene_ids()[i];
        for (double v : matrix.row(i)) {
            out << '\t' << format_double(v);
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// GMT

GmtContents parse_gmt(const std::filesystem::path& path) {
    auto in = open_input(path);
    return parse_gmt(in);
}

GmtContents parse_gmt(std::istream& in) {
    GmtContents out;
    std::unordered_set<std::string> names;
    std::string line;
    std::size_t line_no = 0;
    while (read_line(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        auto fields = split(line, '\t');
        // Trailing tabs are common in exported GMT files.
        while (fields.size() > 2 && fields.back().empty()) {
            fields.pop_back();
        }
        if (fields.size() < 3) {
            throw ParseError("malformed GMT line " + std::to_string(line_no) +
                                 ": expected name, description and at least one gene",
                             line_no, 0);
        }
        RawGeneSet set;
        set.name = std::string(fields[0]);
        set.description = std::string(fields[1]);
        if (!names.insert(set.name).second) {
            throw ParseError("duplicate gene set name '" + set.name + "' on line " + std::to_string(line_no), line_no,
                             1);
        }
        std::unordered_set<std::string_view> seen;
        for (std::size_t c = 2; c < fields.size(); ++c) {
            if (fields[c].empty()) {
                continue;
            }
            if (seen.insert(fields[c]).second) {
                set.genes.emplace_back(fields[c]);
            } else {
                ++set.duplicates;
            }
        }
        out.duplicate_symbols += set.duplicates;
        out.sets.push_back(std::move(set));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Response

Response parse_response(const std::filesystem::path& path, ResponseKind kind,
                        std::span<const std::string> array_order) {
    auto in = open_input(path);
    return parse_response(in, kind, array_order);
}

Response parse_response(std::istream& in, ResponseKind kind, std::span<const std::string> array_order) {
    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t j = 0; j < array_order.size(); ++j) {
        position.emplace(array_order[j], j);
    }
    const std::size_t n = array_order.size();
    const bool survival = kind == ResponseKind::Survival;
    std::vector<int> labels(n, 0);
    std::vector<double> times(n, 0.0);
    std::vector<int> events(n, 0);
    std::vector<bool> seen(n, false);

    std::string line;
    std::size_t line_no = 0;
    while (read_line(in, line)) {
        ++line_no;
        if (skippable(line)) {
            continue;
        }
        auto fields = split(line, '\t');
        if (line_no == 1 && (fields[0] == "array_id" || fields[0] == "array")) {
            continue;
        }
        const std::size_t expected = survival ? 3 : 2;
        if (fields.size() != expected) {
            throw ParseError("response line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                                 " fields, expected " + std::to_string(expected),
                             line_no, 0);
        }
        auto it = position.find(std::string(fields[0]));
        if (it == position.end()) {
            continue;
        }
        const std::size_t j = it->second;
        if (seen[j]) {
            throw ParseError("array '" + std::string(fields[0]) + "' listed twice in response", line_no, 1);
        }
        seen[j] = true;
        if (survival) {
            double t = 0.0;
            if (!parse_real(fields[1], t) || t <= 0.0) {
                throw ParseError("survival time '" + std::string(fields[1]) + "' on line " + std::to_string(line_no) +
                                     " must be a positive real",
                                 line_no, 2);
            }
            double e = 0.0;
            if (!parse_real(fields[2], e) || (e != 0.0 && e != 1.0)) {
                throw ParseError("event indicator '" + std::string(fields[2]) + "' on line " +
                                     std::to_string(line_no) + " must be 0 or 1",
                                 line_no, 3);
            }
            times[j] = t;
            events[j] = static_cast<int>(e);
        } else {
            int label = 0;
            const auto f = fields[1];
            auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), label);
            const bool ok = ec == std::errc() && ptr == f.data() + f.size();
            const bool known = ok && label >= 1 && (kind != ResponseKind::TwoGroup || label <= 2);
            if (!known) {
                throw ParseError("unknown label '" + std::string(f) + "' on line " + std::to_string(line_no), line_no,
                                 2);
            }
            labels[j] = label;
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (!seen[j]) {
            throw InputError("array '" + array_order[j] + "' is missing from the response file");
        }
    }
    switch (kind) {
    case ResponseKind::TwoGroup: return Response::two_group(std::move(labels));
    case ResponseKind::MultiGroup: return Response::multi_group(std::move(labels));
    case ResponseKind::Survival: return Response::survival(std::move(times), std::move(events));
    }
    throw InputError("unsupported response kind");
}

// ---------------------------------------------------------------------------
// Alignment

AlignedCategories align_and_filter(std::span<const RawGeneSet> sets, const ExpressionMatrix& matrix,
                                   std::size_t min_size) {
    if (min_size < 1) {
        throw InputError("min_size must be at least 1");
    }
    const std::size_t m = matrix.genes();
    AlignedCategories out;
    out.report.input_sets = sets.size();
    for (const auto& set : sets) {
        Category cat{set.name, set.description, {}};
        for (const auto& symbol : set.genes) {
            if (auto idx = matrix.gene_index(symbol)) {
                cat.members.push_back(*idx);
            } else {
                ++out.report.unresolved_symbols;
            }
        }
        std::sort(cat.members.begin(), cat.members.end());
        cat.members.erase(std::unique(cat.members.begin(), cat.members.end()), cat.members.end());
        if (cat.members.size() < min_size) {
            ++out.report.dropped_too_small;
            continue;
        }
        if (min_size > m || cat.members.size() > m - min_size) {
            ++out.report.dropped_too_large;
            continue;
        }
        out.categories.push_back(std::move(cat));
    }
    if (out.categories.empty()) {
        throw InputError("no gene sets remain after alignment and size filtering (min size " +
                         std::to_string(min_size) + ")");
    }
    return out;
}

std::vector<RawGeneSet> to_raw_sets(const CategoryCollection& categories, const ExpressionMatrix& matrix) {
    std::vector<RawGeneSet> out;
    out.reserve(categories.size());
    for (const auto& c : categories) {
        RawGeneSet s{c.name, c.description, {}, 0};
        for (auto i : c.members) {
            s.genes.push_back(matrix.gene_ids()[i]);
        }
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace catsafe
