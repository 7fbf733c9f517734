#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace egovario {

/// Planar location in a projected, meter-valued coordinate system.
struct Point {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point&, const Point&) = default;
};

struct Record {
    double x = 0.0;
    double y = 0.0;
    std::optional<double> outcome;
    std::vector<std::optional<double>> extras;
    friend bool operator==(const Record&, const Record&) = default;
};

/**
 * Geo-coded observations. Column order is fixed: x, y, outcome, then any
 * number of covariates. Immutable after construction.
 */
class SpatialDataset {
public:
    SpatialDataset() = default;
    /// Validates coordinates are finite and every record carries one value per extra column.
    SpatialDataset(std::vector<std::string> column_names, std::vector<Record> records,
                   std::string source_name);

    [[nodiscard]] std::size_t size() const noexcept { return records_.size(); }
    [[nodiscard]] const std::vector<Record>& records() const noexcept { return records_; }
    [[nodiscard]] const Record& operator[](std::size_t i) const { return records_[i]; }
    /// All column names, x/y/outcome first.
    [[nodiscard]] const std::vector<std::string>& column_names() const noexcept { return columns_; }
    [[nodiscard]] const std::string& outcome_name() const { return columns_.at(2); }
    [[nodiscard]] const std::string& source_name() const noexcept { return source_name_; }

    [[nodiscard]] std::size_t n_missing_outcome() const noexcept;
    [[nodiscard]] std::vector<Point> coordinates() const;

    /// Coordinates and outcomes of the records whose outcome is present.
    [[nodiscard]] std::vector<Point> observed_coordinates() const;
    [[nodiscard]] std::vector<double> observed_outcomes() const;

    /// Values of a named column (outcome or extra). Throws ValidationError for unknown names.
    [[nodiscard]] std::vector<std::optional<double>> column(std::string_view name) const;
    [[nodiscard]] bool has_column(std::string_view name) const;

    friend bool operator==(const SpatialDataset&, const SpatialDataset&) = default;

private:
    std::vector<std::string> columns_;
    std::vector<Record> records_;
    std::string source_name_;
};

enum class Delimiter { auto_detect, comma, semicolon, tab };

/// Printed after loading so users see which columns were taken as x, y and outcome.
inline constexpr std::string_view kColumnOrderNotice =
    "Column order: 1st column x-coordinate (m), 2nd column y-coordinate (m), "
    "3rd column outcome; further columns are ignored by variogram estimation.";

using NoticeSink = std::function<void(std::string_view)>;

/**
 * Parse a delimited table into a SpatialDataset.
 *
 * A header row is assumed when the first two cells of the first row are not
 * numbers. Empty cells, "NA" and "NaN" are read as missing. Throws ParseError
 * for malformed rows or fewer than three columns and ValidationError for
 * missing or non-finite coordinates.
 */
[[nodiscard]] SpatialDataset load_dataset(std::istream& in, std::string source_name,
                                          Delimiter delimiter = Delimiter::auto_detect,
                                          const NoticeSink& notice = {});
[[nodiscard]] SpatialDataset load_dataset(const std::string& path,
                                          Delimiter delimiter = Delimiter::auto_detect,
                                          const NoticeSink& notice = {});

/// Comma-separated with a header row and "NA" for missing cells; reloads to an identical dataset.
void write_dataset(std::ostream& out, const SpatialDataset& ds);

struct MissingnessReport {
    std::size_t n_total = 0;
    std::size_t n_missing_outcome = 0;
    std::vector<Point> observed_points;
    std::vector<Point> missing_points;
};

[[nodiscard]] MissingnessReport missingness_summary(const SpatialDataset& ds);

}  // namespace egovario
