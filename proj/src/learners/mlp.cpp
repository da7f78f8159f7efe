#include <cmath>
#include <random>

#include "degbench/error.hpp"
#include "degbench/rng.hpp"
#include "learners/internal.hpp"

namespace degbench {

MlpState mlp_initial_state(std::size_t features, std::size_t hidden, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> he(0.0, std::sqrt(2.0 / static_cast<double>(features)));
    std::normal_distribution<double> out(0.0, std::sqrt(1.0 / static_cast<double>(hidden)));
    MlpState s;
    const auto h = static_cast<Eigen::Index>(hidden), m = static_cast<Eigen::Index>(features);
    s.w1.resize(h, m);
    for (Eigen::Index i = 0; i < h; ++i)
        for (Eigen::Index j = 0; j < m; ++j) s.w1(i, j) = he(rng);
    s.b1 = Eigen::VectorXd::Constant(h, 0.01);
    s.w2.resize(h);
    for (Eigen::Index i = 0; i < h; ++i) s.w2(i) = out(rng);
    s.b2 = 0.0;
    return s;
}

double mlp_loss_and_gradient(const MlpState& p, const Eigen::MatrixXd& z, const Eigen::VectorXd& t,
                             MlpState* g) {
    const double n = static_cast<double>(z.rows());
    Eigen::MatrixXd pre = z * p.w1.transpose();
    pre.rowwise() += p.b1.transpose();
    const Eigen::MatrixXd act = pre.cwiseMax(0.0);
    const Eigen::VectorXd out = (act * p.w2).array() + p.b2;
    const Eigen::VectorXd err = out - t;
    const double loss = 0.5 * err.squaredNorm() / n;
    if (g) {
        const Eigen::VectorXd d_out = err / n;
        g->w2 = act.transpose() * d_out;
        g->b2 = d_out.sum();
        Eigen::MatrixXd d_pre = d_out * p.w2.transpose();
        d_pre.array() *= (pre.array() > 0.0).cast<double>();
        g->w1 = d_pre.transpose() * z;
        g->b1 = d_pre.colwise().sum().transpose();
    }
    return loss;
}

namespace detail {

Eigen::VectorXd predict_mlp(const MlpState& s, const Eigen::MatrixXd& z) {
    Eigen::MatrixXd pre = z * s.w1.transpose();
    pre.rowwise() += s.b1.transpose();
    const Eigen::VectorXd out = (pre.cwiseMax(0.0) * s.w2).array() + s.b2;
    return (out.array() * s.y_sd + s.y_mean).matrix();
}

MlpState fit_mlp(const Hyperparams& hp, std::uint64_t seed, const Eigen::MatrixXd& z,
                 const Eigen::VectorXd& y) {
    const auto hidden = static_cast<std::size_t>(std::max(1L, std::lround(hp.at("hidden"))));
    const double lr = hp.at("learning_rate");
    const double momentum = hp.at("momentum");
    const long epochs = std::lround(hp.at("epochs"));

    MlpState s = mlp_initial_state(static_cast<std::size_t>(z.cols()), hidden, seed);
    s.y_mean = y.mean();
    const double var = (y.array() - s.y_mean).square().mean();
    s.y_sd = var > 0.0 ? std::sqrt(var) : 1.0;
    const Eigen::VectorXd t = (y.array() - s.y_mean) / s.y_sd;

    MlpState grad, vel;
    vel.w1 = Eigen::MatrixXd::Zero(s.w1.rows(), s.w1.cols());
    vel.b1 = Eigen::VectorXd::Zero(s.b1.size());
    vel.w2 = Eigen::VectorXd::Zero(s.w2.size());
    vel.b2 = 0.0;
    for (long e = 0; e < epochs; ++e) {
        const double loss = mlp_loss_and_gradient(s, z, t, &grad);
        if (!std::isfinite(loss))
            throw Error(ErrorKind::training,
                        "NN training diverged (non-finite loss) at epoch " + std::to_string(e));
        vel.w1 = momentum * vel.w1 - lr * grad.w1;
        vel.b1 = momentum * vel.b1 - lr * grad.b1;
        vel.w2 = momentum * vel.w2 - lr * grad.w2;
        vel.b2 = momentum * vel.b2 - lr * grad.b2;
        s.w1 += vel.w1;
        s.b1 += vel.b1;
        s.w2 += vel.w2;
        s.b2 += vel.b2;
    }
    if (!s.w1.allFinite() || !s.w2.allFinite() || !std::isfinite(s.b2))
        throw Error(ErrorKind::training, "NN training diverged (non-finite weights)");
    return s;
}

}  // namespace detail
}  // namespace degbench
