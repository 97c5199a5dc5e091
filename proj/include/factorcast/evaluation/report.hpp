#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "factorcast/evaluation/adf.hpp"
#include "factorcast/evaluation/metrics.hpp"
#include "factorcast/evaluation/predictability.hpp"
#include "factorcast/evaluation/identifiability.hpp"

namespace factorcast::eval {

/// horizon,mse,mae with a final "all" row.
void write_error_report(const std::filesystem::path& path, const std::vector<ErrorMetrics>& per_step,
                        const ErrorMetrics& overall);

struct StockReport {
    CorrelationReport correlation;
    std::map<std::size_t, PrecisionReport> precision;  // keyed by N
};

/// metric,value rows: ic, ic_std, rank_ic, rank_ic_std, days_used, days_skipped, p@N...
void write_stock_report(const std::filesystem::path& path, const StockReport& report);

struct NamedAdf {
    std::string name;  // e.g. "c1.f0"
    AdfReport report;
};

/// One row per series; "extreme" marks the lowest and highest statistic of each
/// component prefix.
void write_adf_report(const std::filesystem::path& path, const std::vector<NamedAdf>& rows);

/// share of series rejecting the unit root at 5%.
double adf_rejection_share(const std::vector<NamedAdf>& rows);

void write_gap_report(const std::filesystem::path& path, const std::vector<ComponentGap>& gaps);
void write_identifiability_report(const std::filesystem::path& path, const IdentifiabilityReport& report);

/// Factor series as CSV: t, then one column per row of factors.
void write_factor_dump(const std::filesystem::path& path, const Eigen::MatrixXd& factors,
                       const std::vector<std::string>& names);

/// Human-readable summaries.
std::string summarize(const std::vector<ErrorMetrics>& per_step, const ErrorMetrics& overall);
std::string summarize(const StockReport& report);
std::string summarize(const std::vector<NamedAdf>& rows);
std::string summarize(const std::vector<ComponentGap>& gaps);
std::string summarize(const IdentifiabilityReport& report);

}  // namespace factorcast::eval
