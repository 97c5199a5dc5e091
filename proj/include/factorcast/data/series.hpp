#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace factorcast::data {

/// Observed multivariate series, D rows by T columns.
struct SeriesMatrix {
    Eigen::MatrixXd values;
    std::vector<std::string> timestamps;
    std::vector<std::string> names;
    std::string frequency;

    [[nodiscard]] std::size_t dims() const noexcept { return static_cast<std::size_t>(values.rows()); }
    [[nodiscard]] std::size_t length() const noexcept { return static_cast<std::size_t>(values.cols()); }
};

struct LoadOptions {
    std::string frequency;  // empty: infer from the timestamps
};

/// CSV with a header row. The first column holds timestamps, the rest numbers.
/// Blank, non-numeric or non-finite cells are rejected with their line number, as
/// are timestamps that do not strictly increase.
SeriesMatrix load_series(const std::filesystem::path& path, const LoadOptions& options = {});
SeriesMatrix read_series(std::istream& is, const LoadOptions& options = {});
void write_series(const std::filesystem::path& path, const SeriesMatrix& series);

/// CSV helpers shared by the loaders. Cells are trimmed; double quotes group commas.
std::string trim(const std::string& s);
std::vector<std::string> split_csv(const std::string& line);
/// Whole-string decimal parse; false on empty input or trailing characters.
bool parse_number(const std::string& text, double& out);

/// Seconds since 1970-01-01 for "YYYY-MM-DD[ HH:MM[:SS]]" (either '-' or '/' as date
/// separator), or the value itself for a plain number. Throws on anything else.
double parse_timestamp(const std::string& text);

/// Inverse of parse_timestamp for calendar times: "YYYY-MM-DD HH:MM:SS".
std::string format_timestamp(double seconds);

/// "10min", "15min", "1h", "1day", "1week" or "unknown", from the median spacing.
std::string infer_frequency(const std::vector<double>& seconds);

/// Sampling rates used for each frequency: the finest unit plus coarser calendar units.
std::vector<std::size_t> default_rates(const std::string& frequency);

}  // namespace factorcast::data
