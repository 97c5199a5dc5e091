#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "factorcast/cli/config.hpp"
#include "factorcast/data/panel.hpp"
#include "factorcast/data/series.hpp"
#include "factorcast/data/windows.hpp"

namespace factorcast::cli {

/// Parsed command line, before it is merged into a RunConfig.
struct Options {
    std::string command;
    std::string config;
    std::string data;
    std::string out = "out";
    std::string predictions;
    std::string checkpoint;
    std::string kind;
    std::string seed;
    std::string horizon;
    std::string rates;
    std::string topk;
    std::vector<std::string> set;
    bool no_decomp = false;
    bool no_disent = false;
    bool no_reconst = false;
    bool no_ind = false;
};

/// Standardized series cut into train / valid / test examples.
struct ForecastData {
    data::SeriesMatrix series;
    Eigen::MatrixXd scaled;
    data::Splits splits;
    std::vector<data::Window> test_windows;
    objective::SampleSet train, valid, test;
};

ForecastData prepare_forecast(const RunConfig& config, data::SeriesMatrix series);

struct StockData {
    data::StockPanel panel;
    data::Splits splits;  // over days
    data::StockSamples train, valid, test;
};

StockData prepare_stock(const RunConfig& config, data::StockPanel panel);

int cmd_train(const Options& o, RunConfig config, std::ostream& out);
int cmd_forecast(const Options& o, RunConfig config, std::ostream& out);
int cmd_eval(const Options& o, const RunConfig& config, std::ostream& out);
int cmd_backtest(const Options& o, const RunConfig& config, std::ostream& out);
int cmd_adf(const Options& o, RunConfig config, std::ostream& out);
int cmd_synth(const Options& o, const RunConfig& config, std::ostream& out);
int cmd_identifiability(const Options& o, RunConfig config, std::ostream& out);

}  // namespace factorcast::cli
