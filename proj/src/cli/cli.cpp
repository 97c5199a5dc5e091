#include "factorcast/cli/cli.hpp"

#include <filesystem>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "commands.hpp"

namespace factorcast::cli {

namespace {

namespace fs = std::filesystem;

std::unique_ptr<CLI::App> make_app(Options& o) {
    auto app = std::make_unique<CLI::App>("Multi-scale latent factor forecasting, stock scoring and backtesting.", "factorcast");
    app->require_subcommand(1);
    app->fallthrough();
    app->set_help_all_flag("--help-all", "Show help for every subcommand");

    app->add_subcommand("train", "Fit a model; writes checkpoint.txt, loss_history.csv and run.cfg");
    app->add_subcommand("forecast", "Predict the test split with a trained model");
    app->add_subcommand("eval", "Score a forecast.csv or a stock predictions file");
    app->add_subcommand("backtest", "TopK-Drop replay of stock predictions; writes cr.csv and trades.csv");
    app->add_subcommand("adf", "ADF unit-root tests on series columns or on learned factors");
    app->add_subcommand("synth", "Generate synthetic identifiable, sinusoid or stock-panel data");
    app->add_subcommand("identifiability", "Generate identifiable data, train, and score factor recovery");

    app->add_option("--config", o.config, "Flat key = value configuration file");
    app->add_option("--data", o.data, "Input series CSV, or stock panel CSV for the stock task");
    app->add_option("--seed", o.seed, "Root seed; required by train, synth and identifiability");
    app->add_option("--out", o.out, "Output directory (created if missing)")->capture_default_str();
    app->add_option("--horizon", o.horizon, "Forecast horizon H");
    app->add_option("--rates", o.rates, "Comma-separated sampling rates, one component each");
    app->add_option("--topk", o.topk, "Portfolio size k for backtest");
    app->add_option("--kind", o.kind, "synth data kind: identifiable, sinusoid or panel");
    app->add_option("--predictions", o.predictions, "Predictions file for eval and backtest");
    app->add_option("--checkpoint", o.checkpoint, "Directory written by train");
    app->add_option("--set", o.set, "Override one config key, as key=value (repeatable)");
    app->add_flag("--no-decomp", o.no_decomp, "Ablation: one component at rate 1");
    app->add_flag("--no-disent", o.no_disent, "Ablation: drop the KL term");
    app->add_flag("--no-reconst", o.no_reconst, "Ablation: drop the reconstruction and predictability terms");
    app->add_flag("--no-ind", o.no_ind, "Ablation: predictors read every component's factors");
    return app;
}

RunConfig build_config(const Options& o) {
    KeyValues kv;
    // A trained model's own settings come first so its shapes are reproduced.
    if (!o.checkpoint.empty()) {
        const fs::path stored = fs::path(o.checkpoint) / "run.cfg";
        if (!fs::exists(stored)) throw std::invalid_argument("checkpoint directory " + o.checkpoint + " has no run.cfg");
        kv = KeyValues::load(stored);
    }
    if (!o.config.empty()) {
        const auto file = KeyValues::load(o.config);
        for (const auto& [k, v] : file.entries()) kv.set(k, v);
    }
    if (!o.seed.empty()) kv.set("seed", o.seed);
    if (!o.horizon.empty()) kv.set("horizon", o.horizon);
    if (!o.rates.empty()) kv.set("rates", o.rates);
    if (!o.topk.empty()) kv.set("topk", o.topk);
    for (const auto& s : o.set) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) throw std::invalid_argument("--set expects key=value, got '" + s + "'");
        kv.set(s.substr(0, eq), s.substr(eq + 1));
    }
    if (o.no_decomp) kv.set("no_decomp", "true");
    if (o.no_disent) kv.set("no_disent", "true");
    if (o.no_reconst) kv.set("no_reconst", "true");
    if (o.no_ind) kv.set("no_ind", "true");

    const bool needs_seed = o.command == "train" || o.command == "synth" || o.command == "identifiability";
    if (needs_seed && !kv.has("seed")) throw std::invalid_argument(o.command + " needs --seed (or seed in the config)");

    RunConfig c = resolve(kv);
    c.apply_ablations();
    c.validate();
    return c;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    auto app = make_app(o);
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app->parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app->help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app->help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "factorcast: " << e.what() << '\n';
        return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
    }
    o.command = app->get_subcommands().front()->get_name();
    try {
        RunConfig c = build_config(o);
        if (o.command == "train") return cmd_train(o, c, out);
        if (o.command == "forecast") return cmd_forecast(o, c, out);
        if (o.command == "eval") return cmd_eval(o, c, out);
        if (o.command == "backtest") return cmd_backtest(o, c, out);
        if (o.command == "adf") return cmd_adf(o, c, out);
        if (o.command == "synth") return cmd_synth(o, c, out);
        if (o.command == "identifiability") return cmd_identifiability(o, c, out);
        err << "factorcast: unknown subcommand " << o.command << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::string what = e.what();
        for (auto& ch : what)
            if (ch == '\n') ch = ' ';
        err << "factorcast: " << o.command << ": " << what << '\n';
        return 1;
    }
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

std::string help_text() {
    Options o;
    return make_app(o)->help("", CLI::AppFormatMode::All);
}

std::vector<FlagDoc> flag_docs() {
    Options o;
    auto app = make_app(o);
    std::vector<FlagDoc> docs;
    for (const CLI::Option* opt : app->get_options()) {
        for (const auto& name : opt->get_lnames()) docs.push_back({"--" + name, opt->get_description()});
    }
    return docs;
}

}  // namespace factorcast::cli
