#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "factorcast/cli/cli.hpp"
#include "factorcast/cli/config.hpp"
#include "factorcast/data/series.hpp"

using namespace factorcast;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = FACTORCAST_FIXTURES;

struct Outcome {
    int code = 0;
    std::string out, err;
};

Outcome run(std::vector<std::string> args) {
    std::ostringstream out, err;
    Outcome o;
    o.code = cli::run(args, out, err);
    o.out = out.str();
    o.err = err.str();
    return o;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "factorcast_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::vector<std::vector<double>> numeric_rows(const fs::path& p) {
    std::ifstream is(p);
    std::string line;
    std::getline(is, line);
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        std::vector<double> row;
        for (const auto& cell : data::split_csv(line)) {
            double v = 0.0;
            REQUIRE(data::parse_number(cell, v));
            row.push_back(v);
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("help documents every flag") {
    const auto docs = cli::flag_docs();
    const auto help = cli::help_text();
    std::set<std::string> names;
    for (const auto& d : docs) {
        names.insert(d.name);
        CHECK_MESSAGE(!d.description.empty(), d.name);
        CHECK_MESSAGE(help.find(d.name) != std::string::npos, d.name);
    }
    for (const char* required : {"--config", "--data", "--seed", "--out", "--horizon", "--rates", "--no-decomp", "--no-disent",
                                 "--no-reconst", "--no-ind", "--topk", "--kind", "--predictions", "--checkpoint"}) {
        CHECK_MESSAGE(names.count(required) == 1, required);
    }
    for (const char* sub : {"train", "forecast", "eval", "backtest", "adf", "synth", "identifiability"}) {
        CHECK_MESSAGE(help.find(sub) != std::string::npos, sub);
    }
    const auto o = run({"--help"});
    CHECK(o.code == 0);
    CHECK(o.out.find("--no-reconst") != std::string::npos);
}

TEST_CASE("synth is byte-identical for a seed") {
    const auto a = scratch("synth_a"), b = scratch("synth_b"), c = scratch("synth_c");
    REQUIRE(run({"synth", "--kind", "identifiable", "--seed", "7", "--out", a.string()}).code == 0);
    REQUIRE(run({"synth", "--kind", "identifiable", "--seed", "7", "--out", b.string()}).code == 0);
    REQUIRE(run({"synth", "--kind", "identifiable", "--seed", "8", "--out", c.string()}).code == 0);
    CHECK(slurp(a / "series.csv") == slurp(b / "series.csv"));
    CHECK(slurp(a / "truth_factors.csv") == slurp(b / "truth_factors.csv"));
    CHECK(slurp(a / "series.csv") != slurp(c / "series.csv"));
    REQUIRE(run({"synth", "--kind", "panel", "--seed", "7", "--set", "panel.days=40", "--set", "panel.assets=4", "--out", a.string()}).code == 0);
    REQUIRE(run({"synth", "--kind", "panel", "--seed", "7", "--set", "panel.days=40", "--set", "panel.assets=4", "--out", b.string()}).code == 0);
    CHECK(slurp(a / "panel.csv") == slurp(b / "panel.csv"));
}

TEST_CASE("eval of an exact forecast reports zero error") {
    const auto dir = scratch("eval_exact");
    {
        std::ofstream os(dir / "forecast.csv");
        os << "sample,channel,step,predicted,target\n";
        for (int s = 0; s < 3; ++s)
            for (int h = 0; h < 4; ++h) os << s << ",0," << h << ',' << s * 0.5 - h << ',' << s * 0.5 - h << '\n';
    }
    const auto o = run({"eval", "--predictions", (dir / "forecast.csv").string(), "--out", dir.string()});
    REQUIRE(o.code == 0);
    CHECK(o.out.rfind("MSE 0 ", 0) == 0);
    std::ifstream is(dir / "errors.csv");
    std::string line, last;
    while (std::getline(is, line)) last = line;
    CHECK(last == "all,0,0");
}

TEST_CASE("train on the sinusoid fixture reproduces the recorded loss history") {
    const auto dir = scratch("train_fixture");
    const auto o = run({"train", "--data", (kFixtures / "sinusoid.csv").string(), "--config", (kFixtures / "sinusoid.cfg").string(),
                        "--seed", "1", "--out", dir.string()});
    REQUIRE_MESSAGE(o.code == 0, o.err);
    const auto got = numeric_rows(dir / "loss_history.csv");
    const auto want = numeric_rows(kFixtures / "sinusoid_loss_history.csv");
    CHECK(slurp(dir / "loss_history.csv").substr(0, 40) == slurp(kFixtures / "sinusoid_loss_history.csv").substr(0, 40));
    REQUIRE(got.size() == want.size());
    for (std::size_t r = 0; r < got.size(); ++r) {
        REQUIRE(got[r].size() == want[r].size());
        for (std::size_t c = 0; c < got[r].size(); ++c) CHECK(got[r][c] == doctest::Approx(want[r][c]).epsilon(1e-9));
    }
    // Validation loss falls across the recorded epochs.
    CHECK(want.back()[8] < 0.5 * want.front()[8]);

    // The checkpoint reloads for forecasting and factor analysis.
    const auto f = run({"forecast", "--data", (kFixtures / "sinusoid.csv").string(), "--checkpoint", dir.string(), "--out",
                        (dir / "forecast").string()});
    REQUIRE_MESSAGE(f.code == 0, f.err);
    CHECK(fs::exists(dir / "forecast" / "forecast.csv"));
    const auto e = run({"eval", "--predictions", (dir / "forecast" / "forecast.csv").string(), "--out", (dir / "eval").string()});
    CHECK(e.code == 0);
    CHECK(fs::exists(dir / "eval" / "errors.csv"));

    const auto a = run({"adf", "--data", (kFixtures / "sinusoid.csv").string(), "--checkpoint", dir.string(), "--out",
                        (dir / "adf").string()});
    CHECK_MESSAGE(a.code == 0, a.err);
    CHECK(fs::exists(dir / "adf" / "adf.csv"));
}

TEST_CASE("stock pipeline runs through forecast, eval and backtest") {
    const auto dir = scratch("stock");
    const std::vector<std::string> small{"--set", "task=stock", "--set", "rates=1,2", "--set", "factors=2", "--set", "encoder_channels=4",
                                         "--set", "predictor_hidden=8", "--set", "head_hidden=8", "--set", "predictor_span=4",
                                         "--set", "stock_window=20", "--set", "epochs=1", "--set", "panel.assets=8", "--set",
                                         "panel.days=120"};
    auto with = [&](std::vector<std::string> args) {
        args.insert(args.end(), small.begin(), small.end());
        return run(args);
    };
    REQUIRE(with({"synth", "--kind", "panel", "--seed", "3", "--out", dir.string()}).code == 0);
    const auto panel = (dir / "panel.csv").string();
    const auto t = with({"train", "--data", panel, "--seed", "2", "--out", (dir / "model").string()});
    REQUIRE_MESSAGE(t.code == 0, t.err);
    const auto f = run({"forecast", "--data", panel, "--checkpoint", (dir / "model").string(), "--out", (dir / "f").string()});
    REQUIRE_MESSAGE(f.code == 0, f.err);
    const auto pred = (dir / "f" / "predictions.csv").string();
    const auto e = run({"eval", "--data", panel, "--predictions", pred, "--out", (dir / "e").string()});
    REQUIRE_MESSAGE(e.code == 0, e.err);
    CHECK(e.out.find("Rank IC") != std::string::npos);
    const auto b = run({"backtest", "--data", panel, "--predictions", pred, "--topk", "3", "--out", (dir / "b").string()});
    REQUIRE_MESSAGE(b.code == 0, b.err);
    CHECK(fs::exists(dir / "b" / "cr.csv"));
    CHECK(fs::exists(dir / "b" / "trades.csv"));
}

TEST_CASE("failures exit nonzero with one diagnostic line") {
    const auto dir = scratch("errors");
    const std::vector<std::vector<std::string>> cases{
        {"train", "--bogus"},
        {},
        {"train", "--data", "missing.csv"},  // no seed
        {"train", "--data", "missing.csv", "--seed", "1", "--out", dir.string()},
        {"synth", "--seed", "1", "--set", "unknown_key=1", "--out", dir.string()},
        {"synth", "--seed", "1", "--set", "epochs=ten", "--out", dir.string()},
        {"synth", "--seed", "1", "--kind", "nope", "--out", dir.string()},
        {"eval", "--out", dir.string()},
        {"forecast", "--data", "x.csv", "--checkpoint", dir.string()},
        {"synth", "--seed", "1", "--rates", "1,0", "--out", dir.string()},
    };
    for (const auto& args : cases) {
        const auto o = run(args);
        std::string joined;
        for (const auto& a : args) joined += a + " ";
        CHECK_MESSAGE(o.code != 0, joined);
        CHECK_MESSAGE(std::count(o.err.begin(), o.err.end(), '\n') == 1, std::string(joined + "-> " + o.err));
    }
}

TEST_CASE("config renders and resolves to the same settings") {
    cli::KeyValues kv;
    kv.set("rates", "1,7,30");
    kv.set("learning_rate", "0.0001234");
    kv.set("beta_stages", "0:0.2,10:1");
    kv.set("split", "0.7,0.1,0.2");
    kv.set("no_ind", "yes");
    auto c = cli::resolve(kv);
    c.apply_ablations();
    CHECK(c.model.components.rates == std::vector<std::size_t>{1, 7, 30});
    CHECK_FALSE(c.model.independent);
    const auto first = cli::render(c).entries();
    const auto again = cli::render(cli::resolve(cli::render(c))).entries();
    CHECK(first == again);

    std::istringstream is("# comment\n  epochs = 3  # trailing\n\nseed=9\n");
    const auto parsed = cli::KeyValues::parse(is, "inline");
    CHECK(parsed.entries().at("epochs") == "3");
    CHECK(cli::resolve(parsed).seed == 9);
    std::istringstream bad("epochs 3\n");
    CHECK_THROWS_AS(cli::KeyValues::parse(bad, "inline"), std::invalid_argument);

    const auto s1 = cli::derive_seeds(1), s2 = cli::derive_seeds(2);
    CHECK(s1.init != s1.fit);
    CHECK(s1.init != s2.init);
}

}  // TEST_SUITE
