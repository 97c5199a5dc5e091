#include "factorcast/data/panel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <stdexcept>

#include "factorcast/data/series.hpp"
#include "factorcast/util/random.hpp"

namespace factorcast::data {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Weekdays from 2020-01-02 onward in YYYY-MM-DD form.
std::vector<std::string> trading_dates(std::size_t n) {
    std::vector<std::string> out;
    double t = parse_timestamp("2020-01-02");
    while (out.size() < n) {
        const auto days = static_cast<long>(std::floor(t / 86400.0));
        const long weekday = ((days % 7) + 7 + 3) % 7;  // 1970-01-01 was a Thursday; 0 is Monday
        if (weekday < 5) out.push_back(format_timestamp(t).substr(0, 10));
        t += 86400.0;
    }
    return out;
}

}  // namespace

void StockPanel::validate() const {
    const std::size_t cells = days() * asset_count();
    if (days() == 0 || asset_count() == 0) throw std::invalid_argument("panel has no days or no assets");
    if (features.size() != cells * kFeatureCount || labels.size() != cells || suspended.size() != cells ||
        limit.size() != cells) {
        throw std::invalid_argument("panel arrays do not match " + std::to_string(days()) + " days x " +
                                    std::to_string(asset_count()) + " assets");
    }
    for (std::size_t c = 0; c < cells; ++c) {
        for (std::size_t f = 0; f < kFeatureCount; ++f) {
            const double v = features[c * kFeatureCount + f];
            if (!std::isfinite(v) || v < 0 || (f != Volume && v == 0)) {
                throw std::invalid_argument("panel cell " + std::to_string(c) + " has an invalid f" + std::to_string(f + 1));
            }
        }
        if (!std::isfinite(labels[c])) throw std::invalid_argument("panel cell " + std::to_string(c) + " has a non-finite label");
    }
}

double AssetCycle::log_price(double t, double drift) const {
    return level + drift * t + weekly_amp * std::sin(kTwoPi * t / 5.0 + weekly_phase) +
           monthly_amp * std::sin(kTwoPi * t / 20.0 + monthly_phase);
}

std::vector<AssetCycle> stock_cycles(const StockPanelConfig& config, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "panel-cycles"));
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);
    std::uniform_real_distribution<double> scale(0.5, 1.5);
    std::uniform_real_distribution<double> level(std::log(0.5), std::log(2.0));
    std::vector<AssetCycle> out(config.assets);
    for (auto& c : out) {
        c.level = std::log(config.base_price) + level(rng);
        c.weekly_amp = config.weekly_amplitude * scale(rng);
        c.weekly_phase = phase(rng);
        c.monthly_amp = config.monthly_amplitude * scale(rng);
        c.monthly_phase = phase(rng);
    }
    return out;
}

StockPanel generate_stock_panel(const StockPanelConfig& config, std::uint64_t seed) {
    if (config.assets == 0 || config.days == 0) throw std::invalid_argument("stock panel needs assets and days");
    if (config.noise < 0 || config.suspension < 0 || config.suspension >= 1 || config.limit_threshold <= 0) {
        throw std::invalid_argument("invalid stock panel noise, suspension or limit settings");
    }
    const std::size_t n = config.days;
    const std::size_t m = config.assets;
    const auto cycles = stock_cycles(config, seed);

    StockPanel p;
    p.dates = trading_dates(n);
    for (std::size_t a = 0; a < m; ++a) {
        char name[32];
        std::snprintf(name, sizeof name, "A%03zu", a);
        p.assets.emplace_back(name);
    }
    p.features.assign(n * m * kFeatureCount, 0.0);
    p.labels.assign(n * m, 0.0);
    p.suspended.assign(n * m, 0);
    p.limit.assign(n * m, 0);

    Rng rng(derive_seed(seed, "panel-paths"));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::vector<double> latent(n + 1);
    std::vector<double> observed(n + 1);
    for (std::size_t a = 0; a < m; ++a) {
        // One extra latent day supplies the final label.
        double walk = 0.0;
        for (std::size_t t = 0; t <= n; ++t) {
            if (t > 0) walk += config.noise * normal(rng);
            latent[t] = std::exp(cycles[a].log_price(static_cast<double>(t), config.drift) + walk);
        }
        for (std::size_t t = 0; t <= n; ++t) {
            const bool halted = t > 0 && t < n && config.suspension > 0 && uniform(rng) < config.suspension;
            observed[t] = halted ? observed[t - 1] : latent[t];
            if (t < n) p.suspended[p.cell(t, a)] = halted ? 1 : 0;
        }
        for (std::size_t t = 0; t < n; ++t) {
            const std::size_t c = p.cell(t, a);
            double* f = &p.features[c * kFeatureCount];
            const double close = observed[t];
            const double prev = t > 0 ? observed[t - 1] : close;
            const double ret = close / prev - 1.0;
            // Shape draws happen on every day so halts do not shift later paths.
            const double zo = normal(rng), zh = std::abs(normal(rng)), zl = std::abs(normal(rng)), zv = normal(rng);
            f[Close] = close;
            if (p.suspended[c]) {
                f[Open] = f[High] = f[Low] = f[Vwap] = close;
                f[Volume] = 0.0;
            } else {
                const double spread = 0.5 * config.noise;
                f[Open] = prev * std::exp(spread * zo);
                f[High] = std::max(f[Open], close) * std::exp(spread * zh);
                f[Low] = std::min(f[Open], close) * std::exp(-spread * zl);
                f[Vwap] = 0.25 * (f[Open] + f[High] + f[Low] + close);
                f[Volume] = config.base_volume * std::exp(0.2 * zv + 10.0 * std::abs(ret));
                p.limit[c] = t > 0 && std::abs(ret) >= config.limit_threshold ? 1 : 0;
            }
            p.labels[c] = observed[t + 1] / close - 1.0;
        }
    }
    return p;
}

StockPanel read_panel(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::invalid_argument("panel CSV is empty");
    const auto header = split_csv(line);
    static const std::vector<std::string> kHeader = {"date", "asset", "f1", "f2", "f3", "f4", "f5", "f6", "label", "suspended", "limit"};
    if (header != kHeader) throw std::invalid_argument("panel CSV header must be date,asset,f1,...,f6,label,suspended,limit");

    struct Row {
        std::size_t day, asset;
        double values[kFeatureCount + 1];
        std::uint8_t suspended, limit;
    };
    std::vector<Row> rows;
    std::map<std::string, std::size_t> day_index, asset_index;
    StockPanel p;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_csv(line);
        const std::string where = "line " + std::to_string(line_no) + ": ";
        if (cells.size() != kHeader.size()) throw std::invalid_argument(where + "expected 11 cells, found " + std::to_string(cells.size()));
        Row r{};
        auto [dit, dnew] = day_index.emplace(cells[0], p.dates.size());
        if (dnew) p.dates.push_back(cells[0]);
        auto [ait, anew] = asset_index.emplace(cells[1], p.assets.size());
        if (anew) p.assets.push_back(cells[1]);
        r.day = dit->second;
        r.asset = ait->second;
        for (std::size_t k = 0; k <= kFeatureCount; ++k) {
            if (!parse_number(cells[2 + k], r.values[k]) || !std::isfinite(r.values[k])) {
                throw std::invalid_argument(where + "invalid value '" + cells[2 + k] + "' in column " + kHeader[2 + k]);
            }
        }
        for (int k = 0; k < 2; ++k) {
            const std::string& flag = cells[9 + k];
            if (flag != "0" && flag != "1") throw std::invalid_argument(where + kHeader[9 + k] + " must be 0 or 1");
            (k == 0 ? r.suspended : r.limit) = flag == "1" ? 1 : 0;
        }
        rows.push_back(r);
    }
    const std::size_t cells = p.dates.size() * p.assets.size();
    if (rows.size() != cells) {
        throw std::invalid_argument("panel CSV has " + std::to_string(rows.size()) + " rows but " +
                                    std::to_string(p.dates.size()) + " dates x " + std::to_string(p.assets.size()) +
                                    " assets");
    }
    p.features.assign(cells * kFeatureCount, 0.0);
    p.labels.assign(cells, 0.0);
    p.suspended.assign(cells, 0);
    p.limit.assign(cells, 0);
    std::vector<std::uint8_t> seen(cells, 0);
    for (const Row& r : rows) {
        const std::size_t c = p.cell(r.day, r.asset);
        if (seen[c]++) throw std::invalid_argument("panel CSV repeats date " + p.dates[r.day] + " asset " + p.assets[r.asset]);
        std::copy(r.values, r.values + kFeatureCount, p.features.begin() + static_cast<long>(c * kFeatureCount));
        p.labels[c] = r.values[kFeatureCount];
        p.suspended[c] = r.suspended;
        p.limit[c] = r.limit;
    }
    p.validate();
    return p;
}

StockPanel load_panel(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read panel file " + path.string());
    return read_panel(is);
}

void write_panel(const std::filesystem::path& path, const StockPanel& panel) {
    panel.validate();
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write panel file " + path.string());
    os << "date,asset,f1,f2,f3,f4,f5,f6,label,suspended,limit\n";
    char buf[40];
    for (std::size_t d = 0; d < panel.days(); ++d) {
        for (std::size_t a = 0; a < panel.asset_count(); ++a) {
            os << panel.dates[d] << ',' << panel.assets[a];
            for (std::size_t f = 0; f < kFeatureCount; ++f) {
                std::snprintf(buf, sizeof buf, ",%.17g", panel.feature(d, a, f));
                os << buf;
            }
            std::snprintf(buf, sizeof buf, ",%.17g", panel.label(d, a));
            os << buf << ',' << int(panel.is_suspended(d, a)) << ',' << int(panel.is_limit(d, a)) << '\n';
        }
    }
}

StockSamples stock_samples(const StockPanel& panel, std::size_t begin, std::size_t end, const StockSampleOptions& options) {
    const std::size_t w = options.window;
    if (w == 0) throw std::invalid_argument("stock window must be at least 1");
    if (end > panel.days() || begin >= end) throw std::invalid_argument("stock day range outside the panel");
    begin = std::max(begin, w - 1);
    if (begin >= end) {
        throw std::invalid_argument("no day in range has a full " + std::to_string(w) + "-day window");
    }
    StockSamples out;
    out.set = objective::SampleSet(kFeatureCount, w, 1);
    const std::size_t stride = kFeatureCount * w;
    std::vector<double> inputs;
    std::vector<double> targets;
    for (std::size_t d = begin; d < end; ++d) {
        inputs.clear();
        targets.clear();
        for (std::size_t a = 0; a < panel.asset_count(); ++a) {
            if (options.skip_suspended && panel.is_suspended(d, a)) continue;
            const double last_close = panel.close(d, a);
            double last_volume = panel.feature(d, a, Volume);
            if (!(last_volume > 0)) {
                double sum = 0.0;
                std::size_t count = 0;
                for (std::size_t t = d + 1 - w; t <= d; ++t) {
                    const double v = panel.feature(t, a, Volume);
                    if (v > 0) {
                        sum += v;
                        ++count;
                    }
                }
                last_volume = count > 0 ? sum / static_cast<double>(count) : 1.0;
            }
            const std::size_t base = inputs.size();
            inputs.resize(base + stride);
            for (std::size_t f = 0; f < kFeatureCount; ++f) {
                const double denom = f == Volume ? last_volume : last_close;
                for (std::size_t t = 0; t < w; ++t) inputs[base + f * w + t] = panel.feature(d + 1 - w + t, a, f) / denom - 1.0;
            }
            targets.push_back(panel.label(d, a));
            out.day.push_back(d);
            out.asset.push_back(a);
        }
        if (targets.empty()) continue;
        if (options.zscore_labels && targets.size() > 1) {
            double mean = 0.0;
            for (double y : targets) mean += y;
            mean /= static_cast<double>(targets.size());
            double var = 0.0;
            for (double y : targets) var += (y - mean) * (y - mean);
            const double sd = std::sqrt(var / static_cast<double>(targets.size()));
            for (double& y : targets) y = sd > 1e-12 ? (y - mean) / sd : 0.0;
        }
        std::vector<std::size_t> group;
        for (std::size_t i = 0; i < targets.size(); ++i) {
            group.push_back(out.set.size());
            out.set.add(std::span<const double>(inputs).subspan(i * stride, stride), std::span<const double>(&targets[i], 1),
                        static_cast<std::int64_t>(d + 1 - w));
        }
        out.set.groups.push_back(std::move(group));
    }
    if (out.set.empty()) throw std::invalid_argument("stock day range produced no samples");
    return out;
}

}  // namespace factorcast::data
