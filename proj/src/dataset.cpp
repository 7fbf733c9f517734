#include "egovario/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "egovario/error.hpp"

namespace egovario {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    s = s.substr(first, last - first + 1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return s;
}

bool is_missing_token(std::string_view cell) {
    return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == "NAN";
}

std::optional<double> parse_number(std::string_view cell) {
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    double value = 0.0;
    const auto* end = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(cell.data(), end, value);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return value;
}

char detect_delimiter(std::string_view line) {
    const auto commas = std::count(line.begin(), line.end(), ',');
    const auto semis = std::count(line.begin(), line.end(), ';');
    const auto tabs = std::count(line.begin(), line.end(), '\t');
    if (tabs > commas && tabs > semis) return '\t';
    if (semis > commas) return ';';
    return ',';
}

std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delim, start);
        cells.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return cells;
}

}  // namespace

SpatialDataset::SpatialDataset(std::vector<std::string> column_names, std::vector<Record> records,
                               std::string source_name)
    : columns_(std::move(column_names)), records_(std::move(records)), source_name_(std::move(source_name)) {
    if (columns_.size() < 3) throw ParseError("dataset needs at least 3 columns (x, y, outcome)");
    const std::size_t n_extra = columns_.size() - 3;
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& r = records_[i];
        if (!std::isfinite(r.x) || !std::isfinite(r.y))
            throw ValidationError("record " + std::to_string(i + 1) + ": non-finite coordinate");
        if (r.extras.size() != n_extra)
            throw ValidationError("record " + std::to_string(i + 1) + ": expected " +
                                  std::to_string(n_extra) + " extra values");
    }
}

std::size_t SpatialDataset::n_missing_outcome() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(records_.begin(), records_.end(), [](const Record& r) { return !r.outcome; }));
}

std::vector<Point> SpatialDataset::coordinates() const {
    std::vector<Point> pts;
    pts.reserve(records_.size());
    for (const auto& r : records_) pts.push_back({r.x, r.y});
    return pts;
}

std::vector<Point> SpatialDataset::observed_coordinates() const {
    std::vector<Point> pts;
    for (const auto& r : records_)
        if (r.outcome) pts.push_back({r.x, r.y});
    return pts;
}

std::vector<double> SpatialDataset::observed_outcomes() const {
    std::vector<double> z;
    for (const auto& r : records_)
        if (r.outcome) z.push_back(*r.outcome);
    return z;
}

bool SpatialDataset::has_column(std::string_view name) const {
    return std::find(columns_.begin() + 2, columns_.end(), name) != columns_.end();
}

std::vector<std::optional<double>> SpatialDataset::column(std::string_view name) const {
    const auto it = std::find(columns_.begin(), columns_.end(), name);
    if (it == columns_.end()) throw ValidationError("unknown column '" + std::string(name) + "'");
    const auto idx = static_cast<std::size_t>(it - columns_.begin());
    std::vector<std::optional<double>> out;
    out.reserve(records_.size());
    for (const auto& r : records_) {
        if (idx == 0) out.emplace_back(r.x);
        else if (idx == 1) out.emplace_back(r.y);
        else if (idx == 2) out.push_back(r.outcome);
        else out.push_back(r.extras[idx - 3]);
    }
    return out;
}

SpatialDataset load_dataset(std::istream& in, std::string source_name, Delimiter delimiter,
                            const NoticeSink& notice) {
    std::vector<std::string> lines;
    std::vector<std::size_t> line_numbers;
    {
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
            if (trim(line).empty()) continue;
            lines.push_back(std::move(line));
            line_numbers.push_back(lineno);
        }
    }
    if (lines.empty()) throw ParseError(source_name + ": empty table (need columns x, y, outcome)");

    char delim = ',';
    switch (delimiter) {
        case Delimiter::auto_detect: delim = detect_delimiter(lines.front()); break;
        case Delimiter::comma: delim = ','; break;
        case Delimiter::semicolon: delim = ';'; break;
        case Delimiter::tab: delim = '\t'; break;
    }

    const auto first = split(lines.front(), delim);
    if (first.size() < 3)
        throw ParseError(source_name + ": found " + std::to_string(first.size()) +
                         " column(s); need at least 3 (x, y, outcome)");

    const bool has_header = !(parse_number(first[0]) && parse_number(first[1]));
    std::vector<std::string> names;
    if (has_header) {
        for (std::size_t c = 0; c < first.size(); ++c)
            names.emplace_back(first[c].empty() ? "V" + std::to_string(c + 1) : std::string(first[c]));
    } else {
        names = {"x", "y", "outcome"};
        for (std::size_t c = 3; c < first.size(); ++c) names.push_back("V" + std::to_string(c + 1));
    }
    const std::size_t ncol = names.size();

    std::vector<Record> records;
    for (std::size_t li = has_header ? 1 : 0; li < lines.size(); ++li) {
        const auto row = line_numbers[li];
        const auto cells = split(lines[li], delim);
        if (cells.size() != ncol)
            throw ParseError(source_name + ": row " + std::to_string(row) + ": expected " +
                             std::to_string(ncol) + " columns, found " + std::to_string(cells.size()));
        std::vector<std::optional<double>> values(ncol);
        for (std::size_t c = 0; c < ncol; ++c) {
            if (is_missing_token(cells[c])) continue;
            auto v = parse_number(cells[c]);
            if (!v)
                throw ParseError(source_name + ": row " + std::to_string(row) + ", column " +
                                 std::to_string(c + 1) + ": cannot parse '" + std::string(cells[c]) + "'");
            values[c] = *v;
        }
        if (!values[0] || !values[1] || !std::isfinite(*values[0]) || !std::isfinite(*values[1]))
            throw ValidationError(source_name + ": row " + std::to_string(row) +
                                  ": coordinates must be finite numbers");
        Record r;
        r.x = *values[0];
        r.y = *values[1];
        if (values[2] && std::isfinite(*values[2])) r.outcome = values[2];
        for (std::size_t c = 3; c < ncol; ++c) {
            if (values[c] && !std::isfinite(*values[c])) values[c].reset();
            r.extras.push_back(values[c]);
        }
        records.push_back(std::move(r));
    }
    if (records.empty()) throw ParseError(source_name + ": table has a header but no data rows");

    if (notice) notice(kColumnOrderNotice);
    return SpatialDataset(std::move(names), std::move(records), std::move(source_name));
}

SpatialDataset load_dataset(const std::string& path, Delimiter delimiter, const NoticeSink& notice) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    return load_dataset(in, path, delimiter, notice);
}

void write_dataset(std::ostream& out, const SpatialDataset& ds) {
    const auto& names = ds.column_names();
    for (std::size_t c = 0; c < names.size(); ++c) out << (c ? "," : "") << names[c];
    out << '\n';
    const auto old_precision = out.precision(17);
    auto put = [&out](const std::optional<double>& v) {
        if (v) out << *v;
        else out << "NA";
    };
    for (const auto& r : ds.records()) {
        out << r.x << ',' << r.y << ',';
        put(r.outcome);
        for (const auto& e : r.extras) {
            out << ',';
            put(e);
        }
        out << '\n';
    }
    out.precision(old_precision);
}

MissingnessReport missingness_summary(const SpatialDataset& ds) {
    MissingnessReport rep;
    rep.n_total = ds.size();
    for (const auto& r : ds.records()) {
        if (r.outcome) rep.observed_points.push_back({r.x, r.y});
        else rep.missing_points.push_back({r.x, r.y});
    }
    rep.n_missing_outcome = rep.missing_points.size();
    return rep;
}

}  // namespace egovario
