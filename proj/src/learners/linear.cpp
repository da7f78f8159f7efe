#include <Eigen/Dense>

#include "degbench/error.hpp"
#include "learners/internal.hpp"

namespace degbench::detail {

LinearState fit_linear(const Eigen::MatrixXd& z, const Eigen::VectorXd& y,
                       const std::vector<std::string>& names, const Standardization& scaling) {
    const Eigen::Index n = z.rows(), m = z.cols();
    Eigen::MatrixXd design(n, m + 1);
    design.col(0).setOnes();
    design.rightCols(m) = z;

    std::vector<std::string> constant;
    for (Eigen::Index j = 0; j < m; ++j)
        if (scaling.sd(j) == 1.0 && (z.col(j).array() == 0.0).all())
            constant.push_back(names[static_cast<std::size_t>(j)]);

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < m + 1 || !constant.empty()) {
        std::string offending;
        if (!constant.empty()) {
            for (const auto& c : constant) offending += (offending.empty() ? "" : ", ") + c;
        } else {
            const auto& perm = qr.colsPermutation().indices();
            for (Eigen::Index k = qr.rank(); k < m + 1; ++k) {
                const auto col = perm(k);
                offending += (offending.empty() ? "" : ", ") +
                             (col == 0 ? std::string("(intercept)")
                                       : names[static_cast<std::size_t>(col - 1)]);
            }
        }
        throw Error(ErrorKind::training, "MVL design is rank deficient (rank " +
                                             std::to_string(qr.rank()) + " of " +
                                             std::to_string(m + 1) + "); offending columns: " +
                                             offending);
    }
    const Eigen::VectorXd beta = qr.solve(y);
    return LinearState{beta.tail(m), beta(0)};
}

}  // namespace degbench::detail
