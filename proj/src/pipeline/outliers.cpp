#include <algorithm>
#include <cmath>

#include "degbench/error.hpp"
#include "degbench/pipeline.hpp"

namespace degbench {

std::vector<Outlier> detect_outliers(const TrainedModel& model, const Eigen::MatrixXd& x,
                                     const Eigen::VectorXd& y, double z_threshold) {
    if (x.rows() < 3) throw Error(ErrorKind::prediction, "outlier detection needs at least 3 rows");
    if (x.rows() != y.size()) throw Error(ErrorKind::prediction, "rows and target length differ");
    const Eigen::VectorXd r = y - model.predict(x);
    const double mean = r.mean();
    const double sd = std::sqrt((r.array() - mean).square().sum() / static_cast<double>(r.size() - 1));
    // A perfect (or uniformly offset) fit has no outliers; guard against
    // rounding noise masquerading as spread.
    if (!(sd > 1e-12 * std::max(1.0, r.cwiseAbs().maxCoeff()))) return {};

    std::vector<Outlier> out;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        const double z = (r(i) - mean) / sd;
        if (std::abs(z) > z_threshold) out.push_back({static_cast<std::size_t>(i), r(i), z});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const Outlier& a, const Outlier& b) { return std::abs(a.z) > std::abs(b.z); });
    return out;
}

}  // namespace degbench
