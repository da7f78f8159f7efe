#include <cmath>

#include "degbench/error.hpp"
#include "degbench/lsfit.hpp"

namespace degbench {

std::string_view to_string(ModelKind kind) {
    switch (kind) {
    case ModelKind::exp1: return "exp1";
    case ModelKind::exp2: return "exp2";
    case ModelKind::gauss1: return "gauss1";
    case ModelKind::gauss2: return "gauss2";
    case ModelKind::poly3: return "poly3";
    }
    return "?";
}

ModelKind parse_model_kind(std::string_view name) {
    for (auto k : kAllModelKinds)
        if (to_string(k) == name) return k;
    throw Error(ErrorKind::config, "unknown parametric model '" + std::string(name) +
                                       "' (expected exp1, exp2, gauss1, gauss2 or poly3)");
}

std::size_t coefficient_count(ModelKind kind) {
    switch (kind) {
    case ModelKind::exp1: return 2;
    case ModelKind::exp2: return 4;
    case ModelKind::gauss1: return 3;
    case ModelKind::gauss2: return 6;
    case ModelKind::poly3: return 4;
    }
    return 0;
}

std::vector<std::string> coefficient_names(ModelKind kind) {
    switch (kind) {
    case ModelKind::exp1: return {"a", "b"};
    case ModelKind::exp2: return {"a", "b", "c", "d"};
    case ModelKind::gauss1: return {"a1", "b1", "c1"};
    case ModelKind::gauss2: return {"a1", "b1", "c1", "a2", "b2", "c2"};
    case ModelKind::poly3: return {"p1", "p2", "p3", "p4"};
    }
    return {};
}

ParametricModel::ParametricModel(ModelKind kind, std::vector<double> coeffs)
    : kind_(kind), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != coefficient_count(kind_))
        throw Error(ErrorKind::fit, std::string(to_string(kind_)) + " takes " +
                                        std::to_string(coefficient_count(kind_)) +
                                        " coefficients, got " + std::to_string(coeffs_.size()));
    if (kind_ == ModelKind::gauss1 || kind_ == ModelKind::gauss2) {
        for (std::size_t i = 2; i < coeffs_.size(); i += 3)
            if (coeffs_[i] == 0.0) throw Error(ErrorKind::fit, "gaussian width must be non-zero");
    }
}

double ParametricModel::operator()(double x) const {
    const auto& c = coeffs_;
    auto gauss = [x](double a, double b, double w) {
        const double z = (x - b) / w;
        return a * std::exp(-z * z);
    };
    switch (kind_) {
    case ModelKind::exp1: return c[0] * std::exp(c[1] * x);
    case ModelKind::exp2: return c[0] * std::exp(c[1] * x) + c[2] * std::exp(c[3] * x);
    case ModelKind::gauss1: return gauss(c[0], c[1], c[2]);
    case ModelKind::gauss2: return gauss(c[0], c[1], c[2]) + gauss(c[3], c[4], c[5]);
    case ModelKind::poly3: return ((c[0] * x + c[1]) * x + c[2]) * x + c[3];
    }
    return 0.0;
}

std::vector<double> ParametricModel::eval(std::span<const double> x) const {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (*this)(x[i]);
    return out;
}

Eigen::MatrixXd ParametricModel::jacobian(std::span<const double> x) const {
    const auto& c = coeffs_;
    Eigen::MatrixXd jac(static_cast<Eigen::Index>(x.size()),
                        static_cast<Eigen::Index>(coeffs_.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        const double xi = x[i];
        auto gauss_row = [&](Eigen::Index col, double a, double b, double w) {
            const double z = (xi - b) / w;
            const double e = std::exp(-z * z);
            jac(r, col) = e;
            jac(r, col + 1) = a * e * 2.0 * z / w;
            jac(r, col + 2) = a * e * 2.0 * z * z / w;
        };
        switch (kind_) {
        case ModelKind::exp2: {
            const double e = std::exp(c[3] * xi);
            jac(r, 2) = e;
            jac(r, 3) = c[2] * xi * e;
            [[fallthrough]];
        }
        case ModelKind::exp1: {
            const double e = std::exp(c[1] * xi);
            jac(r, 0) = e;
            jac(r, 1) = c[0] * xi * e;
            break;
        }
        case ModelKind::gauss2: gauss_row(3, c[3], c[4], c[5]); [[fallthrough]];
        case ModelKind::gauss1: gauss_row(0, c[0], c[1], c[2]); break;
        case ModelKind::poly3:
            jac(r, 0) = xi * xi * xi;
            jac(r, 1) = xi * xi;
            jac(r, 2) = xi;
            jac(r, 3) = 1.0;
            break;
        }
    }
    return jac;
}

ParametricModel ParametricModel::time_stretched(double s) const {
    if (!(s > 0.0)) throw Error(ErrorKind::fit, "time stretch factor must be positive");
    auto c = coeffs_;
    switch (kind_) {
    case ModelKind::exp2: c[3] *= s; [[fallthrough]];
    case ModelKind::exp1: c[1] *= s; break;
    case ModelKind::gauss2:
        c[4] /= s;
        c[5] /= s;
        [[fallthrough]];
    case ModelKind::gauss1:
        c[1] /= s;
        c[2] /= s;
        break;
    case ModelKind::poly3:
        c[0] *= s * s * s;
        c[1] *= s * s;
        c[2] *= s;
        break;
    }
    return {kind_, std::move(c)};
}

ParametricModel ParametricModel::amplitude_scaled(double m) const {
    auto c = coeffs_;
    switch (kind_) {
    case ModelKind::exp2: c[2] *= m; [[fallthrough]];
    case ModelKind::exp1: c[0] *= m; break;
    case ModelKind::gauss2: c[3] *= m; [[fallthrough]];
    case ModelKind::gauss1: c[0] *= m; break;
    case ModelKind::poly3:
        for (auto& v : c) v *= m;
        break;
    }
    return {kind_, std::move(c)};
}

nlohmann::json ParametricModel::to_json() const {
    nlohmann::json j;
    j["kind"] = std::string(to_string(kind_));
    const auto names = coefficient_names(kind_);
    for (std::size_t i = 0; i < names.size(); ++i) j["coeffs"][names[i]] = coeffs_[i];
    return j;
}

}  // namespace degbench
