#include "factorcast/evaluation/adf.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace factorcast::eval {

namespace {

struct OlsFit {
    Eigen::VectorXd beta;
    Eigen::VectorXd std_error;
};

OlsFit ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < x.cols()) throw std::domain_error("degenerate ADF regression (rank deficient design)");
    OlsFit f;
    f.beta = qr.solve(y);
    const Eigen::VectorXd resid = y - x * f.beta;
    const double dof = static_cast<double>(x.rows() - x.cols());
    const double s2 = resid.squaredNorm() / dof;
    // (X'X)^-1 = P R^-1 R^-T P'
    const auto k = x.cols();
    const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd rinv = r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
    const Eigen::MatrixXd inner = rinv * rinv.transpose();
    const Eigen::MatrixXd cov = qr.colsPermutation() * inner * qr.colsPermutation().transpose();
    f.std_error = (s2 * cov.diagonal()).cwiseSqrt();
    return f;
}

// Rows for t in [first, n): columns 1, s(t-1), ds(t-1), ..., ds(t-lag).
void design(std::span<const double> s, std::size_t lag, std::size_t first, Eigen::MatrixXd& x, Eigen::VectorXd& y) {
    const std::size_t n = s.size();
    const auto rows = static_cast<Eigen::Index>(n - first);
    x.resize(rows, static_cast<Eigen::Index>(lag + 2));
    y.resize(rows);
    for (std::size_t t = first; t < n; ++t) {
        const auto r = static_cast<Eigen::Index>(t - first);
        y(r) = s[t] - s[t - 1];
        x(r, 0) = 1.0;
        x(r, 1) = s[t - 1];
        for (std::size_t j = 1; j <= lag; ++j) x(r, static_cast<Eigen::Index>(j + 1)) = s[t - j] - s[t - j - 1];
    }
}

void check_series(std::span<const double> s, std::size_t lag) {
    if (s.size() < 20 + lag) {
        throw std::invalid_argument("ADF needs at least " + std::to_string(20 + lag) + " points for lag " +
                                    std::to_string(lag) + ", got " + std::to_string(s.size()));
    }
    for (double v : s) {
        if (!std::isfinite(v)) throw std::invalid_argument("ADF input contains a non-finite value");
    }
    bool constant = true;
    for (double v : s) constant = constant && v == s[0];
    if (constant) throw std::domain_error("ADF regression is degenerate for a constant series");
}

AdfReport finish(const OlsFit& f, std::size_t lag, std::size_t rows) {
    AdfReport r;
    r.coefficient = f.beta(1);
    r.std_error = f.std_error(1);
    if (!(r.std_error > 0.0) || !std::isfinite(r.std_error)) throw std::domain_error("degenerate ADF regression (zero residual)");
    r.statistic = r.coefficient / r.std_error;
    r.lag = lag;
    r.observations = rows;
    r.reject_1 = r.statistic < kAdfCritical1;
    r.reject_5 = r.statistic < kAdfCritical5;
    r.reject_10 = r.statistic < kAdfCritical10;
    return r;
}

}  // namespace

std::size_t default_max_lag(std::size_t length) {
    return static_cast<std::size_t>(std::floor(12.0 * std::pow(static_cast<double>(length) / 100.0, 0.25)));
}

AdfReport adf_fixed_lag(std::span<const double> series, std::size_t lag) {
    check_series(series, lag);
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    design(series, lag, lag + 1, x, y);
    return finish(ols(x, y), lag, static_cast<std::size_t>(y.size()));
}

AdfReport adf_test(std::span<const double> series, const AdfOptions& options) {
    std::size_t max_lag = options.max_lag.value_or(default_max_lag(series.size()));
    // Shrink the default so short series still leave a usable regression.
    if (!options.max_lag) {
        while (max_lag > 0 && series.size() < 20 + max_lag) --max_lag;
    }
    check_series(series, max_lag);
    std::size_t lag = max_lag;
    if (options.eliminate) {
        Eigen::MatrixXd x;
        Eigen::VectorXd y;
        for (; lag > 0; --lag) {
            design(series, lag, max_lag + 1, x, y);
            const OlsFit f = ols(x, y);
            const auto last = static_cast<Eigen::Index>(lag + 1);
            if (std::abs(f.beta(last) / f.std_error(last)) >= options.elimination_t) break;
        }
    }
    return adf_fixed_lag(series, lag);
}

}  // namespace factorcast::eval
