#pragma once

// Independent reference implementations used only by tests. They favour
// obviousness over speed and never call into the library's numerics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline long double mean(const std::vector<double>& v) {
    long double s = 0;
    for (double x : v) s += x;
    return s / static_cast<long double>(v.size());
}

inline double sse(const std::vector<double>& y, const std::vector<double>& f) {
    long double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const long double r = static_cast<long double>(y[i]) - f[i];
        s += r * r;
    }
    return static_cast<double>(s);
}

inline double rmse(const std::vector<double>& y, const std::vector<double>& f) {
    return std::sqrt(sse(y, f) / static_cast<double>(y.size()));
}

inline double mae(const std::vector<double>& y, const std::vector<double>& f) {
    long double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += std::fabs(static_cast<long double>(y[i]) - f[i]);
    return static_cast<double>(s / static_cast<long double>(y.size()));
}

inline double r2(const std::vector<double>& y, const std::vector<double>& f) {
    const long double m = mean(y);
    long double tot = 0;
    for (double v : y) tot += (v - m) * (v - m);
    return static_cast<double>(1.0L - static_cast<long double>(sse(y, f)) / tot);
}

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const long double ma = mean(a), mb = mean(b);
    long double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return static_cast<double>(sab / std::sqrt(saa * sbb));
}

// Least squares through the normal equations (Cholesky), a different route
// from the library's QR. Column 0 of the returned vector is the intercept.
inline Eigen::VectorXd normal_equations(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    Eigen::MatrixXd a(x.rows(), x.cols() + 1);
    a.col(0).setOnes();
    a.rightCols(x.cols()) = x;
    return (a.transpose() * a).ldlt().solve(a.transpose() * y);
}

// Cubic least squares on x scaled to [-1, 1]-ish, mapped back to
// p1 x^3 + p2 x^2 + p3 x + p4.
inline std::vector<double> cubic_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const double s = *std::max_element(x.begin(), x.end(), [](double a, double b) { return std::fabs(a) < std::fabs(b); });
    const double scale = std::fabs(s) > 0 ? std::fabs(s) : 1.0;
    Eigen::MatrixXd t(static_cast<Eigen::Index>(x.size()), 3);
    Eigen::VectorXd yy(static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double u = x[i] / scale;
        t(static_cast<Eigen::Index>(i), 0) = u;
        t(static_cast<Eigen::Index>(i), 1) = u * u;
        t(static_cast<Eigen::Index>(i), 2) = u * u * u;
        yy(static_cast<Eigen::Index>(i)) = y[i];
    }
    const Eigen::VectorXd q = normal_equations(t, yy);  // q0 + q1 u + q2 u^2 + q3 u^3
    return {q(3) / (scale * scale * scale), q(2) / (scale * scale), q(1) / scale, q(0)};
}

// Central differences with step 1e-6 * max(1, |beta_k|).
inline Eigen::MatrixXd finite_jacobian(const std::function<double(const std::vector<double>&, double)>& f,
                                       const std::vector<double>& beta, const std::vector<double>& x) {
    Eigen::MatrixXd j(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(beta.size()));
    for (std::size_t k = 0; k < beta.size(); ++k) {
        const double h = 1e-6 * std::max(1.0, std::fabs(beta[k]));
        auto hi = beta, lo = beta;
        hi[k] += h;
        lo[k] -= h;
        for (std::size_t i = 0; i < x.size(); ++i)
            j(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = (f(hi, x[i]) - f(lo, x[i])) / (2 * h);
    }
    return j;
}

// The five closed forms written out independently of the library.
inline double curve(int kind, const std::vector<double>& c, double x) {
    auto g = [&](double a, double b, double w) { return a * std::exp(-((x - b) / w) * ((x - b) / w)); };
    switch (kind) {
    case 0: return c[0] * std::exp(c[1] * x);
    case 1: return c[0] * std::exp(c[1] * x) + c[2] * std::exp(c[3] * x);
    case 2: return g(c[0], c[1], c[2]);
    case 3: return g(c[0], c[1], c[2]) + g(c[3], c[4], c[5]);
    default: return ((c[0] * x + c[1]) * x + c[2]) * x + c[3];
    }
}

// Shapley values by averaging marginal contributions over every feature
// ordering (m! orderings), with the interventional value function.
inline std::vector<double> shapley_by_permutations(const std::function<double(const Eigen::RowVectorXd&)>& f,
                                                   const Eigen::RowVectorXd& x, const Eigen::MatrixXd& background) {
    const auto m = static_cast<int>(x.size());
    auto value = [&](const std::vector<bool>& in) {
        long double s = 0;
        for (Eigen::Index b = 0; b < background.rows(); ++b) {
            Eigen::RowVectorXd z = background.row(b);
            for (int j = 0; j < m; ++j)
                if (in[static_cast<std::size_t>(j)]) z(j) = x(j);
            s += f(z);
        }
        return static_cast<double>(s / background.rows());
    };
    std::vector<int> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> phi(static_cast<std::size_t>(m), 0.0);
    double count = 0;
    do {
        std::vector<bool> in(static_cast<std::size_t>(m), false);
        double prev = value(in);
        for (int j : order) {
            in[static_cast<std::size_t>(j)] = true;
            const double next = value(in);
            phi[static_cast<std::size_t>(j)] += next - prev;
            prev = next;
        }
        ++count;
    } while (std::next_permutation(order.begin(), order.end()));
    for (auto& p : phi) p /= count;
    return phi;
}

// Two-term models are only identified up to swapping their terms; order the
// terms canonically (by rate for exp2, by centre for gauss2, with
// non-negative widths) before comparing coefficients.
inline std::vector<double> canonical_terms(int kind, std::vector<double> c) {
    if (kind == 3) {
        c[2] = std::fabs(c[2]);
        c[5] = std::fabs(c[5]);
        if (c[4] < c[1]) std::rotate(c.begin(), c.begin() + 3, c.end());
    } else if (kind == 2) {
        c[2] = std::fabs(c[2]);
    } else if (kind == 1 && c[3] < c[1]) {
        std::rotate(c.begin(), c.begin() + 2, c.end());
    }
    return c;
}

inline double relative_error(double a, double b) {
    return std::fabs(a - b) / std::max(std::fabs(b), 1e-300);
}

}  // namespace oracle
