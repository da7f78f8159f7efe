#include <fstream>

#include "common/text.hpp"
#include "degbench/error.hpp"
#include "degbench/learners.hpp"

namespace degbench {

using nlohmann::json;

namespace {

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json mat_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec_json(m.row(i).transpose()));
    return rows;
}

Eigen::MatrixXd mat_from(const json& j, Eigen::Index cols) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const auto row = vec_from(j[static_cast<std::size_t>(i)]);
        if (row.size() != cols) throw Error(ErrorKind::parse, "ragged weight matrix");
        m.row(i) = row.transpose();
    }
    return m;
}

// Each node is [feature, threshold, left, right, value].
json tree_json(const RegressionTree& t) {
    json nodes = json::array();
    for (const auto& n : t.nodes()) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
    return nodes;
}

RegressionTree tree_from(const json& j, int n_features) {
    std::vector<TreeNode> nodes;
    for (const auto& n : j) {
        TreeNode node{n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(),
                      n.at(3).get<int>(), n.at(4).get<double>()};
        nodes.push_back(node);
    }
    const int count = static_cast<int>(nodes.size());
    if (count == 0) throw Error(ErrorKind::parse, "empty tree in model file");
    for (int i = 0; i < count; ++i) {
        const auto& n = nodes[static_cast<std::size_t>(i)];
        if (n.feature < 0) continue;
        if (n.feature >= n_features || n.left <= i || n.right <= i || n.left >= count ||
            n.right >= count)
            throw Error(ErrorKind::parse, "malformed tree node in model file");
    }
    return RegressionTree(std::move(nodes));
}

}  // namespace

json spec_to_json(const LearnerSpec& spec) {
    return {{"family", std::string(to_string(spec.family))},
            {"hyperparams", spec.hyperparams},
            {"seed", spec.seed}};
}

LearnerSpec spec_from_json(const json& j) {
    LearnerSpec spec;
    spec.family = parse_family(j.at("family").get<std::string>());
    spec.hyperparams = j.value("hyperparams", Hyperparams{});
    spec.seed = j.value("seed", std::uint64_t{0});
    return complete_spec(spec);
}

json model_to_json(const TrainedModel& model) {
    json j;
    j["format_version"] = kModelFormatVersion;
    j["spec"] = spec_to_json(model.spec());
    j["feature_names"] = model.feature_names();
    j["standardization"] = {{"mean", vec_json(model.standardization().mean)},
                            {"sd", vec_json(model.standardization().sd)}};
    j["training_metrics"] = to_json(model.training_metrics());
    j["training_groups"] = model.training_groups();
    j["family_state"] = std::visit(
        [](const auto& s) -> json {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, LinearState>) {
                return {{"coef", vec_json(s.coef)}, {"intercept", s.intercept}};
            } else if constexpr (std::is_same_v<S, ForestState>) {
                json trees = json::array();
                for (const auto& t : s.trees) trees.push_back(tree_json(t));
                return {{"trees", trees}};
            } else if constexpr (std::is_same_v<S, BoostState>) {
                json trees = json::array();
                for (const auto& t : s.trees) trees.push_back(tree_json(t));
                return {{"init", s.init}, {"learning_rate", s.learning_rate}, {"trees", trees}};
            } else {
                return {{"w1", mat_json(s.w1)}, {"b1", vec_json(s.b1)}, {"w2", vec_json(s.w2)},
                        {"b2", s.b2},           {"y_mean", s.y_mean},   {"y_sd", s.y_sd}};
            }
        },
        model.state());
    return j;
}

TrainedModel model_from_json(const json& j) {
    try {
        const int version = j.at("format_version").get<int>();
        if (version != kModelFormatVersion)
            throw Error(ErrorKind::parse, "unsupported model format version " + std::to_string(version));
        const auto spec = spec_from_json(j.at("spec"));
        auto names = j.at("feature_names").get<std::vector<std::string>>();
        const auto m = static_cast<Eigen::Index>(names.size());
        Standardization scaling{vec_from(j.at("standardization").at("mean")),
                                vec_from(j.at("standardization").at("sd"))};
        if (scaling.mean.size() != m || scaling.sd.size() != m)
            throw Error(ErrorKind::parse, "standardization size does not match feature count");
        const auto& s = j.at("family_state");
        FamilyState state;
        switch (spec.family) {
        case Family::MVL: {
            LinearState st{vec_from(s.at("coef")), s.at("intercept").get<double>()};
            if (st.coef.size() != m) throw Error(ErrorKind::parse, "coefficient count mismatch");
            state = std::move(st);
            break;
        }
        case Family::RF: {
            ForestState st;
            for (const auto& t : s.at("trees")) st.trees.push_back(tree_from(t, static_cast<int>(m)));
            if (st.trees.empty()) throw Error(ErrorKind::parse, "forest without trees");
            state = std::move(st);
            break;
        }
        case Family::GB: {
            BoostState st;
            st.init = s.at("init").get<double>();
            st.learning_rate = s.at("learning_rate").get<double>();
            for (const auto& t : s.at("trees")) st.trees.push_back(tree_from(t, static_cast<int>(m)));
            state = std::move(st);
            break;
        }
        case Family::NN: {
            MlpState st;
            st.w1 = mat_from(s.at("w1"), m);
            st.b1 = vec_from(s.at("b1"));
            st.w2 = vec_from(s.at("w2"));
            st.b2 = s.at("b2").get<double>();
            st.y_mean = s.at("y_mean").get<double>();
            st.y_sd = s.at("y_sd").get<double>();
            if (st.b1.size() != st.w1.rows() || st.w2.size() != st.w1.rows())
                throw Error(ErrorKind::parse, "hidden layer size mismatch");
            state = std::move(st);
            break;
        }
        }
        TrainedModel model(spec, std::move(names), std::move(scaling), std::move(state));
        if (j.contains("training_metrics")) model.set_training_metrics(metrics_from_json(j["training_metrics"]));
        if (j.contains("training_groups"))
            model.set_training_groups(j["training_groups"].get<std::vector<std::string>>());
        return model;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::parse, std::string("malformed model document: ") + e.what());
    }
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
    detail::write_file(path, model_to_json(model).dump(2) + "\n");
}

TrainedModel load_model(const std::filesystem::path& path) {
    const auto text = detail::read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::parse, path.string() + ": " + e.what());
    }
    return model_from_json(j);
}

}  // namespace degbench
