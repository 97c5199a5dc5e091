#include "factorcast/evaluation/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace factorcast::eval {

namespace {

std::ofstream open(const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write report " + path.string());
    return os;
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string short_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string prefix_of(const std::string& name) {
    const auto dot = name.find('.');
    return dot == std::string::npos ? name : name.substr(0, dot);
}

}  // namespace

void write_error_report(const std::filesystem::path& path, const std::vector<ErrorMetrics>& per_step,
                        const ErrorMetrics& overall) {
    auto os = open(path);
    os << "horizon,mse,mae\n";
    for (std::size_t h = 0; h < per_step.size(); ++h) os << h + 1 << ',' << num(per_step[h].mse) << ',' << num(per_step[h].mae) << '\n';
    os << "all," << num(overall.mse) << ',' << num(overall.mae) << '\n';
}

void write_stock_report(const std::filesystem::path& path, const StockReport& r) {
    auto os = open(path);
    os << "metric,value\n";
    os << "ic," << num(r.correlation.ic) << '\n';
    os << "ic_std," << num(r.correlation.ic_std) << '\n';
    os << "rank_ic," << num(r.correlation.rank_ic) << '\n';
    os << "rank_ic_std," << num(r.correlation.rank_ic_std) << '\n';
    os << "days_used," << r.correlation.days_used << '\n';
    os << "days_skipped," << r.correlation.days_skipped << '\n';
    for (const auto& [n, p] : r.precision) os << "p@" << n << ',' << num(p.percent) << '\n';
}

void write_adf_report(const std::filesystem::path& path, const std::vector<NamedAdf>& rows) {
    std::map<std::string, std::pair<std::size_t, std::size_t>> extremes;  // prefix -> (argmin, argmax)
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto p = prefix_of(rows[i].name);
        auto it = extremes.find(p);
        if (it == extremes.end()) {
            extremes[p] = {i, i};
            continue;
        }
        if (rows[i].report.statistic < rows[it->second.first].report.statistic) it->second.first = i;
        if (rows[i].report.statistic > rows[it->second.second].report.statistic) it->second.second = i;
    }
    auto os = open(path);
    os << "series,statistic,lag,observations,reject_1pct,reject_5pct,reject_10pct,extreme\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& a = rows[i].report;
        const auto& e = extremes[prefix_of(rows[i].name)];
        const char* mark = e.first == i ? "min" : e.second == i ? "max" : "";
        os << rows[i].name << ',' << num(a.statistic) << ',' << a.lag << ',' << a.observations << ',' << a.reject_1 << ','
           << a.reject_5 << ',' << a.reject_10 << ',' << mark << '\n';
    }
}

double adf_rejection_share(const std::vector<NamedAdf>& rows) {
    if (rows.empty()) return 0.0;
    const auto n = std::count_if(rows.begin(), rows.end(), [](const NamedAdf& r) { return r.report.reject_5; });
    return static_cast<double>(n) / static_cast<double>(rows.size());
}

void write_gap_report(const std::filesystem::path& path, const std::vector<ComponentGap>& gaps) {
    auto os = open(path);
    os << "component,rate,quantity,count,mean,median,q90,max\n";
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        const std::pair<const char*, const GapStats*> parts[] = {
            {"gap", &gaps[i].gap}, {"relative_gap", &gaps[i].relative_gap}, {"pred_error", &gaps[i].pred_error}, {"enc_error", &gaps[i].enc_error}};
        for (const auto& [name, s] : parts) {
            os << i << ',' << gaps[i].rate << ',' << name << ',' << s->count << ',' << num(s->mean) << ',' << num(s->median)
               << ',' << num(s->q90) << ',' << num(s->max) << '\n';
        }
    }
}

void write_identifiability_report(const std::filesystem::path& path, const IdentifiabilityReport& r) {
    auto os = open(path);
    os << "factor,r2\n";
    for (std::size_t f = 0; f < r.r2.size(); ++f) os << f << ',' << num(r.r2[f]) << '\n';
    os << "mean," << num(r.mean) << '\n';
    os << "rank_deficient," << r.rank_deficient << '\n';
}

void write_factor_dump(const std::filesystem::path& path, const Eigen::MatrixXd& factors,
                       const std::vector<std::string>& names) {
    auto os = open(path);
    os << 't';
    for (Eigen::Index r = 0; r < factors.rows(); ++r) {
        os << ',' << (static_cast<std::size_t>(r) < names.size() ? names[static_cast<std::size_t>(r)] : "f" + std::to_string(r));
    }
    os << '\n';
    for (Eigen::Index c = 0; c < factors.cols(); ++c) {
        os << c;
        for (Eigen::Index r = 0; r < factors.rows(); ++r) os << ',' << num(factors(r, c));
        os << '\n';
    }
}

std::string summarize(const std::vector<ErrorMetrics>& per_step, const ErrorMetrics& overall) {
    std::ostringstream os;
    os << "MSE " << short_num(overall.mse) << "  MAE " << short_num(overall.mae) << "  over " << per_step.size()
       << " horizon steps\n";
    if (!per_step.empty()) {
        os << "  step 1: MSE " << short_num(per_step.front().mse) << ", step " << per_step.size() << ": MSE "
           << short_num(per_step.back().mse) << '\n';
    }
    return os.str();
}

std::string summarize(const StockReport& r) {
    std::ostringstream os;
    os << "IC " << short_num(r.correlation.ic) << " (sd " << short_num(r.correlation.ic_std) << ")  Rank IC "
       << short_num(r.correlation.rank_ic) << " (sd " << short_num(r.correlation.rank_ic_std) << ")  days "
       << r.correlation.days_used << " used, " << r.correlation.days_skipped << " skipped\n";
    for (const auto& [n, p] : r.precision) os << "  P@" << n << " " << short_num(p.percent) << "%\n";
    return os.str();
}

std::string summarize(const std::vector<NamedAdf>& rows) {
    std::ostringstream os;
    os << rows.size() << " series, " << short_num(100.0 * adf_rejection_share(rows)) << "% reject the unit root at 5% ("
       << kAdfCritical5 << ")\n";
    std::map<std::string, std::pair<double, double>> range;
    for (const auto& r : rows) {
        auto [it, fresh] = range.try_emplace(prefix_of(r.name), r.report.statistic, r.report.statistic);
        if (!fresh) {
            it->second.first = std::min(it->second.first, r.report.statistic);
            it->second.second = std::max(it->second.second, r.report.statistic);
        }
    }
    for (const auto& [p, mm] : range) os << "  " << p << ": statistic from " << short_num(mm.first) << " to " << short_num(mm.second) << '\n';
    return os.str();
}

std::string summarize(const std::vector<ComponentGap>& gaps) {
    std::ostringstream os;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        const auto& g = gaps[i];
        os << "component " << i << " (rate " << g.rate << "): gap median " << short_num(g.gap.median) << ", max "
           << short_num(g.gap.max) << "; " << g.within_tau << "/" << g.gap.count << " within tau; bound checked on "
           << g.bound_checked << ", violated " << g.bound_violations << '\n';
    }
    return os.str();
}

std::string summarize(const IdentifiabilityReport& r) {
    std::ostringstream os;
    os << "mean R^2 " << short_num(r.mean) << " over " << r.r2.size() << " true factors";
    if (r.rank_deficient) os << " (rank-deficient design)";
    os << '\n';
    return os.str();
}

}  // namespace factorcast::eval
