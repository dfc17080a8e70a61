#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "dpfl/errors.hpp"
#include "dpfl/experiment.hpp"

namespace dpfl {

namespace {

std::string at_line(const YAML::Node& node) {
    const auto mark = node.Mark();
    return mark.line >= 0 ? "line " + std::to_string(mark.line + 1) + ": " : "";
}

template <class T>
T scalar(const YAML::Node& node, const std::string& key) {
    if (!node.IsScalar()) throw ConfigError(at_line(node) + key + " must be a scalar");
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError(at_line(node) + "invalid value '" + node.Scalar() + "' for " + key);
    }
}

double positive(const YAML::Node& node, const std::string& key) {
    const double v = scalar<double>(node, key);
    if (!(v > 0.0)) throw ConfigError(at_line(node) + key + " must be positive");
    return v;
}

double nonnegative(const YAML::Node& node, const std::string& key) {
    const double v = scalar<double>(node, key);
    if (!(v >= 0.0)) throw ConfigError(at_line(node) + key + " must be nonnegative");
    return v;
}

std::size_t count(const YAML::Node& node, const std::string& key) {
    const auto v = scalar<long long>(node, key);
    if (v < 0) throw ConfigError(at_line(node) + key + " must be nonnegative");
    return static_cast<std::size_t>(v);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError("line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    ExperimentConfig cfg;
    if (root.IsNull()) {
        validate_config(cfg);
        return cfg;
    }
    if (!root.IsMap()) throw ConfigError(at_line(root) + "config must be a mapping of dotted keys");

    std::set<std::string> seen;
    for (const auto& item : root) {
        const auto key = item.first.as<std::string>();
        const YAML::Node& v = item.second;
        const std::string where = at_line(item.first);
        if (!seen.insert(key).second) throw ConfigError(where + "duplicate key " + key);

        try {
            if (key == "graph.kind") {
                cfg.graph.kind = graph_kind_from_string(scalar<std::string>(v, key));
            } else if (key == "graph.n") {
                cfg.graph.n = count(v, key);
            } else if (key == "graph.normalize") {
                cfg.graph.normalize = scalar<bool>(v, key);
            } else if (key == "graph.penalty") {
                const auto s = scalar<std::string>(v, key);
                if (s == "laplacian")
                    cfg.graph.penalty = PenaltyKind::laplacian;
                else if (s == "centralized")
                    cfg.graph.penalty = PenaltyKind::centralized;
                else
                    throw ConfigError(where + "graph.penalty must be laplacian or centralized");
            } else if (key == "graph.edges") {
                if (!v.IsSequence()) throw ConfigError(where + "graph.edges must be a list of [i, j] pairs");
                cfg.graph.edges.clear();
                for (const auto& e : v) {
                    if (!e.IsSequence() || e.size() != 2) throw ConfigError(at_line(e) + "edge must be [i, j]");
                    cfg.graph.edges.emplace_back(count(e[0], key), count(e[1], key));
                }
            } else if (key == "loss.kind") {
                const auto s = scalar<std::string>(v, key);
                if (s == "logistic")
                    cfg.loss.kind = DataKind::logistic;
                else if (s == "quadratic_random")
                    cfg.loss.kind = DataKind::quadratic_random;
                else if (s == "quadratic_file")
                    cfg.loss.kind = DataKind::quadratic_file;
                else
                    throw ConfigError(where + "loss.kind must be logistic, quadratic_random or quadratic_file");
            } else if (key == "loss.d") {
                cfg.loss.d = count(v, key);
            } else if (key == "loss.seed") {
                cfg.loss.seed = scalar<std::uint64_t>(v, key);
            } else if (key == "loss.mu_ridge") {
                cfg.loss.mu_ridge = nonnegative(v, key);
            } else if (key == "loss.eig_min") {
                cfg.loss.eig_min = positive(v, key);
            } else if (key == "loss.eig_max") {
                cfg.loss.eig_max = positive(v, key);
            } else if (key == "loss.data_file") {
                std::filesystem::path p = scalar<std::string>(v, key);
                cfg.loss.data_file = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
            } else if (key == "lambda_list") {
                if (!v.IsSequence()) throw ConfigError(where + "lambda_list must be a list");
                cfg.lambda_list.clear();
                for (const auto& x : v) cfg.lambda_list.push_back(nonnegative(x, key));
            } else if (key == "solver.restarts") {
                cfg.solver.restarts = count(v, key);
            } else if (key == "solver.R0") {
                cfg.solver.R0 = nonnegative(v, key);
            } else if (key == "solver.H") {
                cfg.solver.H = nonnegative(v, key);
            } else if (key == "solver.epsilon") {
                cfg.solver.epsilon = positive(v, key);
            } else if (key == "solver.delta_rule") {
                const auto s = scalar<std::string>(v, key);
                if (s == "theorem") {
                    cfg.solver.delta_rule = {};
                } else {
                    cfg.solver.delta_rule = {DeltaRule::Kind::fixed, positive(v, key)};
                }
            } else if (key == "solver.case_override") {
                cfg.solver.case_override = case_override_from_string(scalar<std::string>(v, key));
            } else if (key == "solver.max_inner_iters") {
                cfg.solver.max_inner_iters = count(v, key);
            } else if (key == "output.directory") {
                cfg.output.directory = scalar<std::string>(v, key);
            } else if (key == "output.plot") {
                cfg.output.plot = scalar<bool>(v, key);
            } else if (key == "output.timing") {
                cfg.output.timing = scalar<bool>(v, key);
            } else if (key == "output.round_log") {
                cfg.output.round_log = scalar<bool>(v, key);
            } else {
                throw ConfigError(where + "unknown key " + key);
            }
        } catch (const ConfigError& e) {
            const std::string msg = e.what();
            if (msg.rfind("line ", 0) == 0) throw;
            throw ConfigError(where + msg);
        }
    }
    validate_config(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.graph.n == 0) throw ConfigError("graph.n must be at least 1");
    if (cfg.graph.kind == GraphKind::custom && cfg.graph.edges.empty() && cfg.graph.n > 1) {
        throw ConfigError("custom graph needs graph.edges");
    }
    if (cfg.graph.kind != GraphKind::custom && !cfg.graph.edges.empty()) {
        throw ConfigError("graph.edges is only valid with graph.kind: custom");
    }
    if (cfg.loss.d == 0) throw ConfigError("loss.d must be at least 1");
    if (cfg.loss.kind == DataKind::logistic && !(cfg.loss.mu_ridge > 0.0)) {
        throw ConfigError("loss.mu_ridge must be positive for logistic losses (strong convexity)");
    }
    if (cfg.loss.kind == DataKind::quadratic_random && cfg.loss.eig_min > cfg.loss.eig_max) {
        throw ConfigError("loss.eig_min exceeds loss.eig_max");
    }
    if (cfg.loss.kind == DataKind::quadratic_file) {
        if (cfg.loss.data_file.empty()) throw ConfigError("loss.kind quadratic_file needs loss.data_file");
        if (!std::filesystem::exists(cfg.loss.data_file)) {
            throw ConfigError("loss.data_file " + cfg.loss.data_file.string() + " does not exist");
        }
    }
    if (cfg.lambda_list.empty()) throw ConfigError("lambda_list must not be empty");
    for (double l : cfg.lambda_list) {
        if (!(l >= 0.0)) throw ConfigError("lambda values must be nonnegative");
    }
    if (cfg.solver.max_inner_iters == 0) throw ConfigError("solver.max_inner_iters must be positive");
}

}  // namespace dpfl
