#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <random>
#include <stdexcept>

#include "factorcast/backtest/backtest.hpp"
#include "factorcast/data/synthetic.hpp"
#include "factorcast/evaluation/adf.hpp"
#include "factorcast/evaluation/identifiability.hpp"
#include "factorcast/evaluation/metrics.hpp"
#include "factorcast/evaluation/report.hpp"
#include "factorcast/model/model.hpp"
#include "factorcast/numerics/checkpoint.hpp"
#include "factorcast/util/random.hpp"

namespace factorcast::cli {

namespace fs = std::filesystem;

namespace {

const char* const kCheckpoint = "checkpoint.txt";
const char* const kRunConfig = "run.cfg";
const char* const kForecastHeader = "sample,channel,step,predicted,target";

fs::path output_dir(const Options& o) {
    const fs::path dir(o.out);
    fs::create_directories(dir);
    return dir;
}

void require_data(const Options& o) {
    if (o.data.empty()) throw std::invalid_argument(o.command + " needs --data");
}

void log_seeds(std::ostream& out, const RunConfig& c) {
    const Seeds s = derive_seeds(c.seed);
    out << "seed " << c.seed << ": init " << s.init << ", fit " << s.fit << ", synth " << s.synth << '\n';
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void print(std::ostream& out, const std::string& text) {
    out << text;
    if (text.empty() || text.back() != '\n') out << '\n';
}

bool is_stock(const RunConfig& c) { return c.model.task == model::TaskKind::StockTrend; }

objective::FitResult train_model(model::Model& m, const objective::SampleSet& train, const objective::SampleSet& valid,
                                 const RunConfig& c, std::ostream& out) {
    objective::FitConfig f = c.fit;
    f.seed = derive_seeds(c.seed).fit;
    f.on_epoch = [&](const objective::EpochRecord& r) {
        out << "epoch " << r.epoch << " beta " << r.beta << " train " << r.train_total << " valid prediction "
            << r.valid.prediction << std::endl;
    };
    auto result = objective::fit(m, train, valid, f);
    out << "best epoch " << result.best_epoch << ", validation " << objective::to_string(f.selection) << " loss "
        << result.best_valid << '\n';
    if (result.diverged) out << "stopped early: " << result.message << '\n';
    return result;
}

model::Model load_model(const Options& o, const RunConfig& c) {
    if (o.checkpoint.empty()) throw std::invalid_argument(o.command + " needs --checkpoint (a train output directory)");
    model::Model m(c.model, derive_seeds(c.seed).init);
    num::load_checkpoint(fs::path(o.checkpoint) / kCheckpoint, m.parameters());
    return m;
}

// Input width the model sees for this data.
void fit_input_dim(RunConfig& c, std::size_t series_dims) {
    c.model.input_dim = is_stock(c) ? static_cast<std::size_t>(data::kFeatureCount) : (c.univariate ? 1 : series_dims);
    if (is_stock(c)) c.model.horizon = 1;
}

data::StockPanel load_stock_panel(const Options& o) {
    require_data(o);
    return data::load_panel(o.data);
}

}  // namespace

ForecastData prepare_forecast(const RunConfig& c, data::SeriesMatrix series) {
    ForecastData fd;
    fd.series = std::move(series);
    const std::size_t horizon = c.model.horizon;
    fd.splits = data::chronological_split(fd.series.length(), c.split);
    const auto scaler = data::Standardizer::fit(fd.series.values, fd.splits.train);
    fd.scaled = scaler.apply(fd.series.values);
    const auto train_w = data::segment_windows(fd.splits.train, c.input, horizon, false);
    const auto valid_w = data::segment_windows(fd.splits.valid, c.input, horizon, true);
    fd.test_windows = data::segment_windows(fd.splits.test, c.input, horizon, true);
    if (train_w.empty() || valid_w.empty() || fd.test_windows.empty()) {
        throw std::invalid_argument("series of length " + std::to_string(fd.series.length()) + " is too short for input " +
                                    std::to_string(c.input) + " and horizon " + std::to_string(horizon));
    }
    fd.train = data::forecast_samples(fd.scaled, train_w, c.input, horizon, c.univariate);
    fd.valid = data::forecast_samples(fd.scaled, valid_w, c.input, horizon, c.univariate);
    fd.test = data::forecast_samples(fd.scaled, fd.test_windows, c.input, horizon, c.univariate);
    return fd;
}

StockData prepare_stock(const RunConfig& c, data::StockPanel panel) {
    StockData sd;
    sd.panel = std::move(panel);
    sd.splits = data::chronological_split(sd.panel.days(), c.split);
    sd.train = data::stock_samples(sd.panel, sd.splits.train.begin, sd.splits.train.end, c.stock);
    sd.valid = data::stock_samples(sd.panel, sd.splits.valid.begin, sd.splits.valid.end, c.stock);
    sd.test = data::stock_samples(sd.panel, sd.splits.test.begin, sd.splits.test.end, c.stock);
    if (sd.train.set.empty() || sd.valid.set.empty() || sd.test.set.empty()) {
        throw std::invalid_argument("panel of " + std::to_string(sd.panel.days()) + " days leaves an empty split for window " +
                                    std::to_string(c.stock.window));
    }
    return sd;
}

int cmd_train(const Options& o, RunConfig c, std::ostream& out) {
    require_data(o);
    const fs::path dir = output_dir(o);
    log_seeds(out, c);
    objective::FitResult result;
    if (is_stock(c)) {
        auto sd = prepare_stock(c, load_stock_panel(o));
        fit_input_dim(c, 0);
        model::Model m(c.model, derive_seeds(c.seed).init);
        out << "training on " << sd.train.set.size() << " stock samples, validating on " << sd.valid.set.size() << '\n';
        result = train_model(m, sd.train.set, sd.valid.set, c, out);
        num::save_checkpoint(dir / kCheckpoint, m.parameters());
    } else {
        auto fd = prepare_forecast(c, data::load_series(o.data));
        fit_input_dim(c, fd.series.dims());
        model::Model m(c.model, derive_seeds(c.seed).init);
        out << "training on " << fd.train.size() << " windows, validating on " << fd.valid.size() << '\n';
        result = train_model(m, fd.train, fd.valid, c, out);
        num::save_checkpoint(dir / kCheckpoint, m.parameters());
    }
    objective::write_loss_history(dir / "loss_history.csv", result.history);
    write_config(dir / kRunConfig, c);
    out << "wrote " << (dir / kCheckpoint).string() << '\n';
    return 0;
}

int cmd_forecast(const Options& o, RunConfig c, std::ostream& out) {
    require_data(o);
    const fs::path dir = output_dir(o);
    if (is_stock(c)) {
        auto sd = prepare_stock(c, load_stock_panel(o));
        fit_input_dim(c, 0);
        auto m = load_model(o, c);
        const auto pred = objective::predict(m, sd.test.set, c.eval_batch);
        const auto grid = backtest::scatter_predictions(sd.panel, sd.test, pred.data);
        backtest::write_predictions(dir / "predictions.csv", grid);
        out << "wrote scores for " << sd.test.set.size() << " (day, asset) pairs to " << (dir / "predictions.csv").string() << '\n';
        return 0;
    }
    auto fd = prepare_forecast(c, data::load_series(o.data));
    fit_input_dim(c, fd.series.dims());
    auto m = load_model(o, c);
    const auto pred = objective::predict(m, fd.test, c.eval_batch);
    const std::size_t h = c.model.horizon, d = fd.series.dims();
    std::ofstream os(dir / "forecast.csv");
    if (!os) throw std::runtime_error("cannot write " + (dir / "forecast.csv").string());
    os << kForecastHeader << '\n';
    for (std::size_t s = 0; s < fd.test.size(); ++s) {
        const auto target = fd.test.target(s);
        for (std::size_t i = 0; i < target.size(); ++i) {
            const std::size_t window = c.univariate ? s / d : s;
            const std::size_t channel = c.univariate ? s % d : i / h;
            os << window << ',' << channel << ',' << i % h << ',' << num(pred.at(s, i)) << ',' << num(target[i]) << '\n';
        }
    }
    std::vector<double> target_all, pred_all(pred.data);
    for (std::size_t s = 0; s < fd.test.size(); ++s)
        for (double v : fd.test.target(s)) target_all.push_back(v);
    const auto model_err = eval::mse_mae(pred_all, target_all);
    const auto naive = data::persistence_forecast(fd.test, h);
    const auto naive_err = eval::mse_mae(naive.data, target_all);
    out << "test MSE " << model_err.mse << ", MAE " << model_err.mae << " (persistence MSE " << naive_err.mse << ", MAE "
        << naive_err.mae << ")\n";
    return 0;
}

int cmd_eval(const Options& o, const RunConfig& c, std::ostream& out) {
    if (o.predictions.empty()) throw std::invalid_argument("eval needs --predictions");
    const fs::path dir = output_dir(o);
    std::ifstream is(o.predictions);
    if (!is) throw std::runtime_error("cannot read predictions " + o.predictions);
    std::string header;
    std::getline(is, header);
    header = data::trim(header);

    if (header == "date,asset,score") {
        const auto panel = load_stock_panel(o);
        const auto grid = backtest::load_predictions(o.predictions, panel);
        std::vector<std::size_t> day;
        std::vector<double> predicted, realized;
        for (std::size_t d = 0; d < panel.days(); ++d)
            for (std::size_t a = 0; a < panel.asset_count(); ++a)
                if (std::isfinite(grid.at(d, a))) {
                    day.push_back(d);
                    predicted.push_back(grid.at(d, a));
                    realized.push_back(panel.label(d, a));
                }
        const auto days = eval::group_by_day(day, predicted, realized);
        eval::StockReport report;
        report.correlation = eval::ic_rank_ic(days);
        for (std::size_t n : c.precision_at) report.precision[n] = eval::precision_at_n(days, n);
        eval::write_stock_report(dir / "stock_report.csv", report);
        print(out, eval::summarize(report));
        return 0;
    }
    if (header != kForecastHeader) {
        throw std::runtime_error(o.predictions + ": unrecognized header (expected '" + std::string(kForecastHeader) +
                                 "' or 'date,asset,score')");
    }
    std::map<std::size_t, std::pair<std::vector<double>, std::vector<double>>> by_step;
    std::vector<double> all_pred, all_target;
    std::string line;
    std::size_t row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (data::trim(line).empty()) continue;
        const auto cells = data::split_csv(line);
        double step = 0, p = 0, t = 0;
        if (cells.size() != 5 || !data::parse_number(cells[2], step) || !data::parse_number(cells[3], p) ||
            !data::parse_number(cells[4], t) || step < 0 || step != std::floor(step)) {
            throw std::runtime_error(o.predictions + ":" + std::to_string(row) + ": malformed row");
        }
        auto& slot = by_step[static_cast<std::size_t>(step)];
        slot.first.push_back(p);
        slot.second.push_back(t);
        all_pred.push_back(p);
        all_target.push_back(t);
    }
    std::vector<eval::ErrorMetrics> per_step;
    for (std::size_t h = 0; h < by_step.size(); ++h) {
        const auto it = by_step.find(h);
        if (it == by_step.end()) throw std::runtime_error(o.predictions + ": steps are not contiguous from 0");
        per_step.push_back(eval::mse_mae(it->second.first, it->second.second));
    }
    const auto overall = eval::mse_mae(all_pred, all_target);
    eval::write_error_report(dir / "errors.csv", per_step, overall);
    print(out, eval::summarize(per_step, overall));
    return 0;
}

int cmd_backtest(const Options& o, const RunConfig& c, std::ostream& out) {
    if (o.predictions.empty()) throw std::invalid_argument("backtest needs --predictions");
    const auto panel = load_stock_panel(o);
    const fs::path dir = output_dir(o);
    const auto grid = backtest::load_predictions(o.predictions, panel);
    const auto result = backtest::run_backtest(panel, grid, c.backtest);
    backtest::write_cr_series(dir / "cr.csv", result);
    backtest::write_trade_log(dir / "trades.csv", result, panel.assets);
    print(out, backtest::summarize(result));
    return 0;
}

int cmd_adf(const Options& o, RunConfig c, std::ostream& out) {
    require_data(o);
    const fs::path dir = output_dir(o);
    std::vector<eval::NamedAdf> rows;
    auto add_rows = [&](const Eigen::MatrixXd& factors, const std::string& prefix) {
        const std::size_t l = c.model.components.factors;
        for (Eigen::Index r = 0; r < factors.rows(); ++r) {
            const Eigen::VectorXd v = factors.row(r).transpose();
            const auto idx = static_cast<std::size_t>(r);
            rows.push_back({prefix + "c" + std::to_string(idx / l) + ".f" + std::to_string(idx % l),
                            eval::adf_test(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())))});
        }
    };
    if (is_stock(c)) {
        if (o.checkpoint.empty()) throw std::invalid_argument("adf on a stock panel analyses learned factors and needs --checkpoint");
        auto panel = load_stock_panel(o);
        fit_input_dim(c, 0);
        auto m = load_model(o, c);
        auto opts = c.stock;
        opts.skip_suspended = false;  // keep every day so each series is evenly spaced
        const auto all = data::stock_samples(panel, 0, panel.days(), opts);
        const auto factors = eval::last_step_factors(m, all.set, c.eval_batch);
        for (std::size_t a = 0; a < panel.asset_count(); ++a) {
            std::vector<Eigen::Index> cols;
            for (std::size_t s = 0; s < all.asset.size(); ++s)
                if (all.asset[s] == a) cols.push_back(static_cast<Eigen::Index>(s));
            Eigen::MatrixXd f(factors.rows(), static_cast<Eigen::Index>(cols.size()));
            for (std::size_t j = 0; j < cols.size(); ++j) f.col(static_cast<Eigen::Index>(j)) = factors.col(cols[j]);
            add_rows(f, panel.assets[a] + ":");
        }
    } else {
        const auto series = data::load_series(o.data);
        if (o.checkpoint.empty()) {
            for (std::size_t r = 0; r < series.dims(); ++r) {
                const Eigen::VectorXd v = series.values.row(static_cast<Eigen::Index>(r)).transpose();
                rows.push_back({series.names[r], eval::adf_test(std::span<const double>(v.data(), series.length()))});
            }
        } else {
            auto fd = prepare_forecast(c, series);
            fit_input_dim(c, fd.series.dims());
            auto m = load_model(o, c);
            if (c.univariate) {
                for (std::size_t r = 0; r < fd.series.dims(); ++r) {
                    add_rows(eval::factor_series(m, fd.scaled.row(static_cast<Eigen::Index>(r))), fd.series.names[r] + ":");
                }
            } else {
                add_rows(eval::factor_series(m, fd.scaled), "");
            }
        }
    }
    eval::write_adf_report(dir / "adf.csv", rows);
    print(out, eval::summarize(rows));
    return 0;
}

int cmd_synth(const Options& o, const RunConfig& c, std::ostream& out) {
    const fs::path dir = output_dir(o);
    const std::uint64_t seed = derive_seeds(c.seed).synth;
    const std::string kind = o.kind.empty() ? "identifiable" : o.kind;
    log_seeds(out, c);
    if (kind == "identifiable") {
        const auto d = data::generate_identifiable(c.identifiable, seed);
        data::write_series(dir / "series.csv", d.series);
        std::vector<std::string> names;
        const std::size_t l = c.identifiable.factors;
        for (Eigen::Index r = 0; r < d.truth.factors.rows(); ++r) {
            names.push_back("c" + std::to_string(static_cast<std::size_t>(r) / l) + ".f" + std::to_string(static_cast<std::size_t>(r) % l));
        }
        eval::write_factor_dump(dir / "truth_factors.csv", d.truth.factors, names);
        out << "wrote " << d.series.dims() << " x " << d.series.length() << " identifiable series\n";
    } else if (kind == "sinusoid") {
        const auto s = data::generate_sinusoid_mixture(c.sinusoid, seed);
        data::write_series(dir / "series.csv", s);
        out << "wrote " << s.dims() << " x " << s.length() << " sinusoid mixture\n";
    } else if (kind == "panel") {
        const auto p = data::generate_stock_panel(c.panel, seed);
        data::write_panel(dir / "panel.csv", p);
        out << "wrote " << p.asset_count() << " assets x " << p.days() << " days stock panel\n";
    } else {
        throw std::invalid_argument("unknown --kind '" + kind + "' (expected identifiable, sinusoid or panel)");
    }
    return 0;
}

int cmd_identifiability(const Options& o, RunConfig c, std::ostream& out) {
    const fs::path dir = output_dir(o);
    const Seeds seeds = derive_seeds(c.seed);
    log_seeds(out, c);
    if (is_stock(c)) throw std::invalid_argument("identifiability runs on the long-horizon task");
    if (c.model.components.count() != c.identifiable.components) {
        throw std::invalid_argument("rates list " + std::to_string(c.model.components.count()) +
                                    " components but the generator uses " + std::to_string(c.identifiable.components));
    }
    c.model.components.factors = c.identifiable.factors;
    c.univariate = false;
    auto gen = data::generate_identifiable(c.identifiable, seeds.synth);
    auto fd = prepare_forecast(c, gen.series);
    fit_input_dim(c, fd.series.dims());
    model::Model m(c.model, seeds.init);
    const auto fitted = train_model(m, fd.train, fd.valid, c, out);
    objective::write_loss_history(dir / "loss_history.csv", fitted.history);

    const auto recovered = eval::factor_series(m, fd.scaled);
    const auto report = eval::identifiability_score(recovered, gen.truth.factors);
    // Control: factors that carry no information about the truth.
    Rng rng(derive_seed(c.seed, "control"));
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::MatrixXd random(recovered.rows(), recovered.cols());
    for (Eigen::Index i = 0; i < random.size(); ++i) random.data()[i] = z(rng);
    const auto control = eval::identifiability_score(random, gen.truth.factors);

    eval::write_identifiability_report(dir / "identifiability.csv", report);
    eval::write_identifiability_report(dir / "identifiability_control.csv", control);
    num::save_checkpoint(dir / kCheckpoint, m.parameters());
    write_config(dir / kRunConfig, c);
    print(out, eval::summarize(report));
    out << "random-factor control mean R^2 " << control.mean << '\n';
    return 0;
}

}  // namespace factorcast::cli
