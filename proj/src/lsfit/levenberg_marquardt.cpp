#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "degbench/error.hpp"
#include "degbench/lsfit.hpp"
#include "degbench/rng.hpp"

namespace degbench {

namespace {

constexpr double kMinWidth = 1e-6;

bool is_gauss(ModelKind k) { return k == ModelKind::gauss1 || k == ModelKind::gauss2; }
bool is_width(ModelKind k, std::size_t i) { return is_gauss(k) && i % 3 == 2; }

// Gaussian widths live in an unconstrained coordinate u with
// c = sqrt(kMinWidth^2 + u^2), so |c| >= kMinWidth throughout the search.
std::vector<double> to_internal(ModelKind k, std::vector<double> coeffs) {
    for (std::size_t i = 0; i < coeffs.size(); ++i)
        if (is_width(k, i))
            coeffs[i] = std::sqrt(std::max(coeffs[i] * coeffs[i] - kMinWidth * kMinWidth, 0.0));
    return coeffs;
}

std::vector<double> to_external(ModelKind k, std::vector<double> theta) {
    for (std::size_t i = 0; i < theta.size(); ++i)
        if (is_width(k, i)) theta[i] = std::sqrt(kMinWidth * kMinWidth + theta[i] * theta[i]);
    return theta;
}

struct Problem {
    ModelKind kind;
    std::span<const double> x;
    std::span<const double> y;

    // Residual vector r = y - f(x); empty optional if non-finite.
    std::optional<Eigen::VectorXd> residual(const std::vector<double>& theta) const {
        ParametricModel m(kind, to_external(kind, theta));
        Eigen::VectorXd r(static_cast<Eigen::Index>(x.size()));
        for (std::size_t i = 0; i < x.size(); ++i) {
            r(static_cast<Eigen::Index>(i)) = y[i] - m(x[i]);
            if (!std::isfinite(r(static_cast<Eigen::Index>(i)))) return std::nullopt;
        }
        return r;
    }

    Eigen::MatrixXd jacobian(const std::vector<double>& theta) const {
        const auto ext = to_external(kind, theta);
        Eigen::MatrixXd jac = ParametricModel(kind, ext).jacobian(x);
        for (std::size_t i = 0; i < theta.size(); ++i)
            if (is_width(kind, i)) jac.col(static_cast<Eigen::Index>(i)) *= theta[i] / ext[i];
        return jac;
    }
};

struct Run {
    std::vector<double> theta;
    double sse = std::numeric_limits<double>::infinity();
    double initial_sse = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

std::optional<Run> levenberg_marquardt(const Problem& p, std::vector<double> theta,
                                       const FitOptions& opt) {
    auto r = p.residual(theta);
    if (!r) return std::nullopt;
    Run run;
    run.sse = r->squaredNorm();
    run.initial_sse = run.sse;
    double lambda = opt.lambda0;
    const auto k = static_cast<Eigen::Index>(theta.size());

    while (run.iterations < opt.max_iter) {
        const Eigen::MatrixXd jac = p.jacobian(theta);
        const Eigen::MatrixXd a = jac.transpose() * jac;
        const Eigen::VectorXd g = jac.transpose() * (*r);
        if (g.lpNorm<Eigen::Infinity>() < opt.tol_grad || run.sse == 0.0) {
            run.converged = true;
            break;
        }
        bool accepted = false;
        while (lambda < 1e20) {
            Eigen::MatrixXd damped = a;
            for (Eigen::Index i = 0; i < k; ++i)
                damped(i, i) += lambda * std::max(a(i, i), 1e-12);
            const Eigen::VectorXd delta = damped.ldlt().solve(g);
            if (!delta.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            std::vector<double> trial(theta);
            for (Eigen::Index i = 0; i < k; ++i) trial[static_cast<std::size_t>(i)] += delta(i);
            auto r_trial = p.residual(trial);
            const double sse_trial = r_trial ? r_trial->squaredNorm()
                                             : std::numeric_limits<double>::infinity();
            if (sse_trial < run.sse) {
                assert(sse_trial <= run.sse);
                const double theta_norm = Eigen::Map<const Eigen::VectorXd>(theta.data(), k).norm();
                theta = std::move(trial);
                r = std::move(r_trial);
                run.sse = sse_trial;
                lambda = std::max(lambda / 10.0, 1e-15);
                accepted = true;
                ++run.iterations;
                if (delta.norm() <= opt.tol_step * (theta_norm + opt.tol_step)) run.converged = true;
                break;
            }
            lambda *= 10.0;
        }
        // No damping level reduces the SSE: stationary to working precision.
        if (!accepted) {
            run.converged = true;
            break;
        }
        if (run.converged) break;
    }
    run.theta = std::move(theta);
    return run;
}

std::vector<double> random_start(ModelKind kind, std::span<const double> x,
                                 std::span<const double> y, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto [xmin, xmax] = std::minmax_element(x.begin(), x.end());
    const double range = *xmax - *xmin;
    double ymax = 0;
    for (double v : y) ymax = std::max(ymax, std::abs(v));
    if (ymax == 0.0) ymax = 1.0;
    // Unit-interval draws mapped onto the scale of the data.
    auto amp = [&] { return unit(rng) * ymax; };
    auto rate = [&] { return (2.0 * unit(rng) - 1.0) * 3.0 / range; };
    auto centre = [&] { return *xmin + unit(rng) * range; };
    auto width = [&] { return (0.1 + unit(rng)) * range; };
    switch (kind) {
    case ModelKind::exp1: return {amp(), rate()};
    case ModelKind::exp2: return {amp(), rate(), amp(), rate()};
    case ModelKind::gauss1: return {amp(), centre(), width()};
    case ModelKind::gauss2: return {amp(), centre(), width(), amp(), centre(), width()};
    case ModelKind::poly3: return {unit(rng), unit(rng), unit(rng), unit(rng)};
    }
    return {};
}

FitResult poly3_closed_form(std::span<const double> x, std::span<const double> y) {
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd a(n, 4);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double xi = x[static_cast<std::size_t>(i)];
        a.row(i) << xi * xi * xi, xi * xi, xi, 1.0;
        b(i) = y[static_cast<std::size_t>(i)];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < 4)
        throw Error(ErrorKind::fit, "poly3 needs at least 4 distinct x values");
    const Eigen::VectorXd p = qr.solve(b);
    ParametricModel model(ModelKind::poly3, {p(0), p(1), p(2), p(3)});
    const auto pred = model.eval(x);
    FitResult res{model, evaluate(y, pred), 0, true, 0, 0, 0};
    double sse0 = 0;
    for (double v : y) sse0 += v * v;
    res.initial_sse = std::max(sse0, res.metrics.sse);
    return res;
}

}  // namespace

std::vector<double> heuristic_start(ModelKind kind, std::span<const double> x,
                                    std::span<const double> y) {
    const std::size_t n = x.size();
    std::size_t first = 0, last = 0, top = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (x[i] < x[first]) first = i;
        if (x[i] > x[last]) last = i;
        if (y[i] > y[top]) top = i;
    }
    const double range = x[last] - x[first];

    // Log-ratio decay rate between the earliest and latest positive samples.
    double rate = 0.0;
    std::optional<std::size_t> pos_first, pos_last;
    for (std::size_t i = 0; i < n; ++i) {
        if (y[i] <= 0.0) continue;
        if (!pos_first || x[i] < x[*pos_first]) pos_first = i;
        if (!pos_last || x[i] > x[*pos_last]) pos_last = i;
    }
    if (pos_first && pos_last && x[*pos_last] > x[*pos_first])
        rate = std::log(y[*pos_last] / y[*pos_first]) / (x[*pos_last] - x[*pos_first]);

    const double a0 = y[first];
    switch (kind) {
    case ModelKind::exp1: return {a0, rate};
    case ModelKind::exp2: return {a0 / 2.0, 2.0 * rate - 0.5 / range, a0 / 2.0, 0.5 * rate};
    case ModelKind::gauss1: return {y[top], x[top], range / 4.0};
    case ModelKind::gauss2: {
        const double centre2 = x[top] + range / 2.0;
        std::size_t near = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (std::abs(x[i] - centre2) < std::abs(x[near] - centre2)) near = i;
        return {y[top], x[top], range / 4.0, y[near], centre2, range / 4.0};
    }
    case ModelKind::poly3: return {0.0, 0.0, 0.0, a0};
    }
    return {};
}

FitResult fit_lm(ModelKind kind, std::span<const double> x_in, std::span<const double> y_in,
                 const std::optional<std::vector<double>>& init, const FitOptions& options) {
    if (x_in.size() != y_in.size())
        throw Error(ErrorKind::fit, "x and y lengths differ");
    const std::size_t k = coefficient_count(kind);
    if (x_in.size() < k)
        throw Error(ErrorKind::fit, std::string(to_string(kind)) + " needs at least " +
                                        std::to_string(k) + " points, got " +
                                        std::to_string(x_in.size()) + " (underdetermined)");
    if (std::all_of(x_in.begin(), x_in.end(), [&](double v) { return v == x_in.front(); }))
        throw Error(ErrorKind::fit, "x is constant");
    if (init && init->size() != k)
        throw Error(ErrorKind::fit, "initial guess has the wrong number of coefficients");

    // Canonical order makes the result independent of input ordering.
    std::vector<std::size_t> order(x_in.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return x_in[a] != x_in[b] ? x_in[a] < x_in[b] : y_in[a] < y_in[b];
    });
    std::vector<double> x, y;
    for (auto i : order) {
        x.push_back(x_in[i]);
        y.push_back(y_in[i]);
    }
    const double window = x.back();

    if (kind == ModelKind::poly3 && options.closed_form_poly3 && !init) {
        auto res = poly3_closed_form(x, y);
        res.window_days = window;
        return res;
    }

    std::vector<std::vector<double>> starts;
    starts.push_back(init ? *init : heuristic_start(kind, x, y));
    Rng rng(options.seed);
    for (int s = 1; s < options.n_restarts; ++s) starts.push_back(random_start(kind, x, y, rng));

    const Problem problem{kind, x, y};
    std::optional<Run> best;
    int best_start = 0;
    for (std::size_t s = 0; s < starts.size(); ++s) {
        auto run = levenberg_marquardt(problem, to_internal(kind, starts[s]), options);
        if (run && (!best || run->sse < best->sse)) {
            best = std::move(run);
            best_start = static_cast<int>(s);
        }
    }
    if (!best)
        throw Error(ErrorKind::fit, "all " + std::to_string(starts.size()) +
                                        " starts diverged (non-finite residuals)");

    ParametricModel model(kind, to_external(kind, best->theta));
    FitResult res{model, evaluate(y, model.eval(x)), best->iterations, best->converged, window,
                  best->initial_sse, best_start};
    return res;
}

}  // namespace degbench
