#include "factorcast/data/series.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace factorcast::data {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') {
            quoted = !quoted;
        } else if (ch == ',' && !quoted) {
            cells.push_back(trim(cell));
            cell.clear();
        } else if (ch != '\r') {
            cell += ch;
        }
    }
    cells.push_back(trim(cell));
    return cells;
}

bool parse_number(const std::string& text, double& out) {
    if (text.empty()) return false;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc() && ptr == end;
}

namespace {

// Days since 1970-01-01 of a proleptic Gregorian date.
long days_from_civil(long y, unsigned m, unsigned d) {
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

struct Civil {
    long year;
    unsigned month, day;
};

Civil civil_from_days(long z) {
    z += 719468;
    const long era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    return {static_cast<long>(yoe) + era * 400 + (m <= 2), m, d};
}

}  // namespace

std::string format_timestamp(double seconds) {
    const auto total = static_cast<long>(std::floor(seconds));
    long days = total / 86400;
    long rem = total % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    const Civil c = civil_from_days(days);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04ld-%02u-%02u %02ld:%02ld:%02ld", c.year, c.month, c.day, rem / 3600,
                  (rem / 60) % 60, rem % 60);
    return buf;
}

double parse_timestamp(const std::string& raw) {
    const std::string text = trim(raw);
    double number = 0.0;
    if (parse_number(text, number)) return number;

    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    char sep1 = 0, sep2 = 0;
    int used = 0;
    if (std::sscanf(text.c_str(), "%d%c%d%c%d%n", &y, &sep1, &mo, &sep2, &d, &used) != 5 || sep1 != sep2 ||
        (sep1 != '-' && sep1 != '/') || mo < 1 || mo > 12 || d < 1 || d > 31) {
        throw std::invalid_argument("unrecognized timestamp '" + text + "'");
    }
    const std::string rest = trim(text.substr(static_cast<std::size_t>(used)));
    if (!rest.empty()) {
        const int n = std::sscanf(rest.c_str(), "%d:%d:%d", &h, &mi, &s);
        if (n < 2 || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 60) {
            throw std::invalid_argument("unrecognized time of day in '" + text + "'");
        }
    }
    const long days = days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
    return static_cast<double>(days) * 86400.0 + h * 3600.0 + mi * 60.0 + s;
}

std::string infer_frequency(const std::vector<double>& seconds) {
    if (seconds.size() < 2) return "unknown";
    std::vector<double> gaps;
    gaps.reserve(seconds.size() - 1);
    for (std::size_t i = 1; i < seconds.size(); ++i) gaps.push_back(seconds[i] - seconds[i - 1]);
    std::nth_element(gaps.begin(), gaps.begin() + static_cast<long>(gaps.size() / 2), gaps.end());
    const double median = gaps[gaps.size() / 2];
    struct Unit {
        double seconds;
        const char* label;
    };
    static constexpr Unit kUnits[] = {{600, "10min"}, {900, "15min"}, {3600, "1h"}, {86400, "1day"}, {604800, "1week"}};
    for (const auto& u : kUnits) {
        if (std::abs(median - u.seconds) <= 0.01 * u.seconds) return u.label;
    }
    return "unknown";
}

std::vector<std::size_t> default_rates(const std::string& frequency) {
    if (frequency == "15min") return {1, 4, 96};   // quarter hour, hour, day
    if (frequency == "10min") return {1, 144};     // ten minutes, day
    if (frequency == "1h") return {1, 168};        // hour, week
    if (frequency == "1day") return {1, 7, 30};    // day, week, month
    if (frequency == "1week") return {1, 2, 4};    // week, fortnight, month
    return {1};
}

SeriesMatrix read_series(std::istream& is, const LoadOptions& options) {
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("series CSV is empty");
    const auto header = split_csv(line);
    if (header.size() < 2) throw std::invalid_argument("series CSV needs a timestamp column and at least one value column");

    SeriesMatrix out;
    out.names.assign(header.begin() + 1, header.end());
    const std::size_t d = out.names.size();
    std::vector<double> values;
    std::vector<double> seconds;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != d + 1) {
            throw std::invalid_argument("line " + std::to_string(line_no) + ": expected " + std::to_string(d + 1) +
                                        " cells, found " + std::to_string(cells.size()));
        }
        double stamp = 0.0;
        try {
            stamp = parse_timestamp(cells[0]);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!seconds.empty() && !(stamp > seconds.back())) {
            throw std::invalid_argument("line " + std::to_string(line_no) + ": timestamp '" + cells[0] +
                                        "' does not increase");
        }
        seconds.push_back(stamp);
        out.timestamps.push_back(cells[0]);
        for (std::size_t c = 0; c < d; ++c) {
            double v = 0.0;
            if (!parse_number(cells[c + 1], v) || !std::isfinite(v)) {
                throw std::invalid_argument("line " + std::to_string(line_no) + ": missing or invalid value '" +
                                            cells[c + 1] + "' in column '" + out.names[c] + "'");
            }
            values.push_back(v);
        }
    }
    const std::size_t t = out.timestamps.size();
    if (t == 0) throw std::invalid_argument("series CSV has no data rows");
    out.values.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(t));
    for (std::size_t col = 0; col < t; ++col)
        for (std::size_t r = 0; r < d; ++r) out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col)) = values[col * d + r];
    out.frequency = options.frequency.empty() ? infer_frequency(seconds) : options.frequency;
    return out;
}

SeriesMatrix load_series(const std::filesystem::path& path, const LoadOptions& options) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read series file " + path.string());
    return read_series(is, options);
}

void write_series(const std::filesystem::path& path, const SeriesMatrix& series) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write series file " + path.string());
    os << "timestamp";
    for (std::size_t r = 0; r < series.dims(); ++r) {
        os << ',' << (r < series.names.size() ? series.names[r] : "x" + std::to_string(r));
    }
    os << '\n';
    char buf[40];
    for (std::size_t c = 0; c < series.length(); ++c) {
        os << (c < series.timestamps.size() ? series.timestamps[c] : std::to_string(c));
        for (std::size_t r = 0; r < series.dims(); ++r) {
            std::snprintf(buf, sizeof buf, ",%.17g", series.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
            os << buf;
        }
        os << '\n';
    }
}

}  // namespace factorcast::data
