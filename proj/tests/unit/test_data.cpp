#include <cmath>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "factorcast/data/panel.hpp"
#include "factorcast/data/series.hpp"
#include "factorcast/data/synthetic.hpp"
#include "factorcast/data/windows.hpp"
#include "factorcast/model/prior.hpp"
#include "../support/gradcheck.hpp"

using namespace factorcast;
using namespace factorcast::data;
using testing::error_of;

namespace {

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "factorcast_unit";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("toy CSV loads as a 2x3 matrix") {
    std::istringstream is("timestamp,a,b\n2020-01-01,1,2\n2020-01-02,3,4\n2020-01-03,5,6.5\n");
    const auto s = read_series(is);
    CHECK(s.dims() == 2);
    CHECK(s.length() == 3);
    CHECK(s.values(0, 2) == 5.0);
    CHECK(s.values(1, 2) == 6.5);
    CHECK(s.names == std::vector<std::string>{"a", "b"});
    CHECK(s.frequency == "1day");
}

TEST_CASE("bad cells and timestamps are rejected with their line") {
    std::istringstream nan_cell("timestamp,a\n1,1\n2,nan\n3,2\n");
    CHECK(error_of([&] { read_series(nan_cell); }).find("line 3") != std::string::npos);
    std::istringstream blank("timestamp,a\n1,1\n2,\n");
    CHECK(error_of([&] { read_series(blank); }).find("line 3") != std::string::npos);
    std::istringstream backwards("timestamp,a\n2,1\n1,2\n");
    CHECK(error_of([&] { read_series(backwards); }).find("does not increase") != std::string::npos);
    std::istringstream ragged("timestamp,a,b\n1,1\n");
    CHECK(error_of([&] { read_series(ragged); }).find("expected 3") != std::string::npos);
}

TEST_CASE("weekly files infer 1week and its rates") {
    std::ostringstream csv;
    csv << "date,OT\n";
    for (int w = 0; w < 20; ++w) csv << format_timestamp(parse_timestamp("2002-01-01") + w * 604800.0).substr(0, 10) << ',' << w << '\n';
    std::istringstream is(csv.str());
    const auto s = read_series(is);
    CHECK(s.frequency == "1week");
    CHECK(default_rates(s.frequency) == std::vector<std::size_t>{1, 2, 4});
    CHECK(default_rates("1day") == std::vector<std::size_t>{1, 7, 30});
    std::istringstream forced("t,a\n1,1\n2,2\n");
    CHECK(read_series(forced, {"1week"}).frequency == "1week");
}

TEST_CASE("timestamps round trip through their text form") {
    CHECK(parse_timestamp("1970-01-02") == 86400.0);
    CHECK(parse_timestamp("2016/07/01 02:15") == parse_timestamp("2016-07-01 02:15:00"));
    CHECK(format_timestamp(parse_timestamp("2024-02-29 23:59:58")) == "2024-02-29 23:59:58");
    CHECK_THROWS(parse_timestamp("July 4th"));
}

TEST_CASE("series files round trip exactly") {
    const auto s = generate_sinusoid_mixture({}, 3);
    const auto path = scratch("series.csv");
    write_series(path, s);
    const auto back = load_series(path);
    CHECK(back.frequency == "1h");
    CHECK(back.timestamps == s.timestamps);
    CHECK((back.values - s.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("chronological splits follow the ratios") {
    const auto a = chronological_split(100, {0.6, 0.2, 0.2});
    CHECK(a.train.size() == 60);
    CHECK(a.valid.size() == 20);
    CHECK(a.test.size() == 20);
    const auto b = chronological_split(10, {0.7, 0.1, 0.2});
    CHECK(b.train.size() == 7);
    CHECK(b.valid.size() == 1);
    CHECK(b.test.size() == 2);
    CHECK(error_of([] { chronological_split(100, {1.0, 0.0, 0.0}); }).find("empty") != std::string::npos);
    CHECK_THROWS(chronological_split(100, {0.5, 0.2, 0.2}));

    for (std::size_t t = 5; t < 300; t += 7) {
        const auto s = chronological_split(t, {0.6, 0.2, 0.2});
        CHECK(s.train.begin == 0);
        CHECK(s.train.end == s.valid.begin);
        CHECK(s.valid.end == s.test.begin);
        CHECK(s.test.end == t);
    }
}

TEST_CASE("window count and boundaries") {
    const auto w = make_windows(10, 5, 2);
    REQUIRE(w.size() == 4);
    CHECK(w.back().target_begin + 2 == 10);
    CHECK(w.front().input_begin == 0);
    CHECK_THROWS(make_windows(10, 5, 0));
    CHECK_THROWS(make_windows(6, 5, 2));
    for (std::size_t len = 3; len < 40; ++len)
        for (std::size_t in = 1; in < len; ++in)
            for (std::size_t h = 1; in + h <= len; ++h) CHECK(make_windows(len, in, h).size() == len - in - h + 1);
}

TEST_CASE("segment windows may borrow context from before the segment") {
    const Segment test{80, 100};
    const auto strict = segment_windows(test, 10, 5, false);
    const auto context = segment_windows(test, 10, 5, true);
    CHECK(strict.size() == 6);
    CHECK(context.size() == 16);
    CHECK(context.front().input_begin == 70);
    CHECK(context.front().target_begin == 80);
    CHECK(context.back().target_begin + 5 == 100);
}

TEST_CASE("dilation padding prepends (k-1)*r zero columns") {
    const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(2, 4);
    CHECK(pad_for_dilation(x, 3, 5).cols() == 14);
    CHECK(pad_for_dilation(x, 1, 5) == x);
    const auto p = pad_for_dilation(x, 3, 1);
    CHECK(p.cols() == 6);
    CHECK(p.leftCols(2).isZero());
    CHECK(p.rightCols(4) == x);
}

TEST_CASE("forecast samples and persistence") {
    Eigen::MatrixXd x(2, 8);
    for (int t = 0; t < 8; ++t) {
        x(0, t) = t;
        x(1, t) = 10 * t;
    }
    const auto w = make_windows(8, 3, 2);
    const auto uni = forecast_samples(x, w, 3, 2, true);
    CHECK(uni.size() == 2 * w.size());
    CHECK(uni.input(1)[2] == 20.0);
    CHECK(uni.target(1)[1] == 40.0);
    const auto multi = forecast_samples(x, w, 3, 2, false);
    CHECK(multi.size() == w.size());
    CHECK(multi.target(0)[2] == 30.0);
    const auto naive = persistence_forecast(multi, 2);
    CHECK(naive.at(0, 0) == 2.0);
    CHECK(naive.at(0, 3) == 20.0);
}

TEST_CASE("standardizer uses only the fitted segment") {
    Eigen::MatrixXd x(1, 4);
    x << 1, 3, 100, 100;
    const auto s = Standardizer::fit(x, {0, 2});
    CHECK(s.mean(0) == 2.0);
    CHECK(s.scale(0) == 1.0);
    CHECK(s.apply(x)(0, 1) == 1.0);
}

TEST_CASE("identity mix without noise reproduces the factors") {
    IdentifiableConfig cfg;
    cfg.noise = 0.0;
    cfg.identity_mix = true;
    cfg.length = 50;
    const auto d = generate_identifiable(cfg, 4);
    CHECK(d.series.values == d.truth.factors);
    CHECK_THROWS(generate_identifiable({.dims = 3}, 1));
}

TEST_CASE("observations are exactly mixing * factors + offset + noise") {
    const auto d = generate_identifiable({}, 11);
    const Eigen::MatrixXd rebuilt = ((d.truth.mixing * d.truth.factors).colwise() + d.truth.offset) + d.truth.noise;
    CHECK(rebuilt == d.series.values);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(d.truth.mixing);
    CHECK(svd.singularValues().minCoeff() > 0.1);
}

TEST_CASE("generators are pure functions of config and seed") {
    const auto a = generate_identifiable({}, 7);
    const auto b = generate_identifiable({}, 7);
    const auto c = generate_identifiable({}, 8);
    CHECK(a.series.values == b.series.values);
    CHECK(a.series.values != c.series.values);
    const auto p = generate_stock_panel({.assets = 5, .days = 80}, 2);
    const auto q = generate_stock_panel({.assets = 5, .days = 80}, 2);
    CHECK(p.features == q.features);
    CHECK(p.labels == q.labels);
    CHECK(p.suspended == q.suspended);
}

TEST_CASE("generated factors match the prior moments across seeds") {
    IdentifiableConfig cfg;
    cfg.length = 4;
    cfg.prior_seed = 21;
    const std::int64_t t = 3;
    const model::ConditionalPrior prior(cfg.prior_seed);
    const int seeds = 10000;
    Eigen::MatrixXd draws(4, seeds);
    for (int s = 0; s < seeds; ++s) draws.col(s) = generate_identifiable(cfg, static_cast<std::uint64_t>(s)).truth.factors.col(t);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            const auto row = draws.row(static_cast<Eigen::Index>(i * 2 + j)).array();
            const double mean = row.mean();
            const double var = (row - mean).square().sum() / (seeds - 1);
            const auto p = prior.at(i, j, t);
            CHECK(var == doctest::Approx(p.stddev * p.stddev).epsilon(0.05));
            CHECK(std::abs(mean - p.mean) < 4.0 * p.stddev / std::sqrt(double(seeds)));
        }
    }
    // Distinct factors of one time stay uncorrelated.
    const Eigen::MatrixXd centered = draws.colwise() - draws.rowwise().mean();
    const Eigen::MatrixXd cov = centered * centered.transpose() / (seeds - 1);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < r; ++c) CHECK(std::abs(cov(r, c)) / std::sqrt(cov(r, r) * cov(c, c)) < 0.05);
}

TEST_CASE("noise-free panel labels follow the seasonal formula") {
    StockPanelConfig cfg;
    cfg.assets = 4;
    cfg.days = 40;
    cfg.noise = 0.0;
    cfg.suspension = 0.0;
    cfg.drift = 0.001;
    const auto p = generate_stock_panel(cfg, 5);
    const auto cycles = stock_cycles(cfg, 5);
    for (std::size_t a = 0; a < cfg.assets; ++a) {
        for (std::size_t d = 0; d < cfg.days; ++d) {
            const double now = cycles[a].log_price(double(d), cfg.drift);
            const double next = cycles[a].log_price(double(d + 1), cfg.drift);
            CHECK(p.label(d, a) == doctest::Approx(std::exp(next - now) - 1.0).epsilon(1e-12));
            CHECK(p.close(d, a) == doctest::Approx(std::exp(now)).epsilon(1e-12));
            CHECK(p.tradable(d, a));
        }
    }
}

TEST_CASE("panel labels equal recomputed close-to-close returns") {
    const auto p = generate_stock_panel({.assets = 20, .days = 200, .suspension = 0.05}, 9);
    std::size_t halted = 0;
    for (std::size_t d = 0; d + 1 < p.days(); ++d) {
        for (std::size_t a = 0; a < p.asset_count(); ++a) {
            const double r = (p.close(d + 1, a) - p.close(d, a)) / p.close(d, a);
            CHECK(p.label(d, a) == doctest::Approx(r).epsilon(1e-12));
            if (p.is_suspended(d, a)) {
                ++halted;
                CHECK(p.feature(d, a, Volume) == 0.0);
                CHECK(p.close(d, a) == p.close(d - 1, a));
            }
        }
    }
    CHECK(halted > 100);
    CHECK(halted < 300);
    const auto none = generate_stock_panel({.assets = 20, .days = 200, .suspension = 0.0}, 9);
    for (auto s : none.suspended) CHECK(s == 0);
}

TEST_CASE("price limit flags big moves") {
    const auto p = generate_stock_panel({.assets = 30, .days = 100, .noise = 0.05, .suspension = 0.0, .limit_threshold = 0.06}, 1);
    std::size_t flagged = 0;
    for (std::size_t d = 1; d < p.days(); ++d) {
        for (std::size_t a = 0; a < p.asset_count(); ++a) {
            const bool big = std::abs(p.close(d, a) / p.close(d - 1, a) - 1.0) >= 0.06;
            CHECK(p.is_limit(d, a) == big);
            flagged += big;
        }
    }
    CHECK(flagged > 0);
}

TEST_CASE("panel CSV round trip and validation") {
    const auto p = generate_stock_panel({.assets = 3, .days = 30, .suspension = 0.1}, 4);
    const auto path = scratch("panel.csv");
    write_panel(path, p);
    const auto q = load_panel(path);
    CHECK(q.dates == p.dates);
    CHECK(q.assets == p.assets);
    CHECK(q.features == p.features);
    CHECK(q.labels == p.labels);
    CHECK(q.suspended == p.suspended);
    CHECK(q.limit == p.limit);

    std::istringstream missing("date,asset,f1,f2,f3,f4,f5,f6,label,suspended,limit\n"
                               "d1,A,1,1,1,1,1,1,0,0,0\nd1,B,1,1,1,1,1,1,0,0,0\nd2,A,1,1,1,1,1,1,0,0,0\n");
    CHECK(error_of([&] { read_panel(missing); }).find("3 rows") != std::string::npos);
    std::istringstream flag("date,asset,f1,f2,f3,f4,f5,f6,label,suspended,limit\nd1,A,1,1,1,1,1,1,0,2,0\n");
    CHECK(error_of([&] { read_panel(flag); }).find("suspended") != std::string::npos);
}

TEST_CASE("stock samples are scale free and grouped by day") {
    const auto p = generate_stock_panel({.assets = 6, .days = 90, .suspension = 0.05}, 3);
    const auto s = stock_samples(p, 0, 90, {.window = 60});
    CHECK(s.set.input_dim() == 6);
    CHECK(s.set.length() == 60);
    CHECK(s.set.groups.size() == 31);
    for (std::size_t i = 0; i < s.set.size(); ++i) {
        const auto in = s.set.input(i);
        CHECK(in[Close * 60 + 59] == doctest::Approx(0.0));
        CHECK(s.set.target(i)[0] == p.label(s.day[i], s.asset[i]));
        CHECK(!p.is_suspended(s.day[i], s.asset[i]));
        CHECK(s.set.start_time(i) == static_cast<std::int64_t>(s.day[i]) - 59);
        for (double v : in) CHECK(std::isfinite(v));
    }
    const auto z = stock_samples(p, 60, 90, {.window = 60, .zscore_labels = true});
    for (const auto& g : z.set.groups) {
        double sum = 0.0;
        for (auto i : g) sum += z.set.target(i)[0];
        CHECK(std::abs(sum) < 1e-9);
    }
    CHECK_THROWS(stock_samples(p, 0, 50, {.window = 60}));
}

}  // TEST_SUITE
