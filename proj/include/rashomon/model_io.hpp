#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"
#include "rashomon/ensemble.hpp"
#include "rashomon/tree.hpp"

// JSON persistence for trees and trained models. Doubles round-trip exactly
// through nlohmann's shortest representation, so a reloaded model predicts
// bit-identically.
namespace rashomon {

using json = nlohmann::ordered_json;

inline json to_json(const Tree& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes) {
    json node = {{"depth", n.depth}};
    if (n.is_leaf()) {
      node["value"] = n.value;
    } else {
      node["column"] = n.column;
      node["left"] = n.left;
      node["right"] = n.right;
    }
    nodes.push_back(std::move(node));
  }
  return {{"n_cols", t.n_cols}, {"nodes", std::move(nodes)}};
}

inline Tree tree_from_json(const json& j) {
  Tree t;
  t.n_cols = j.at("n_cols").get<std::size_t>();
  for (const auto& node : j.at("nodes")) {
    TreeNode n;
    n.depth = node.at("depth").get<std::int32_t>();
    if (node.contains("column")) {
      n.column = node.at("column").get<std::int32_t>();
      n.left = node.at("left").get<std::int32_t>();
      n.right = node.at("right").get<std::int32_t>();
    } else {
      n.value = node.at("value").get<std::vector<double>>();
    }
    t.nodes.push_back(std::move(n));
  }
  const auto count = static_cast<std::int32_t>(t.nodes.size());
  for (const auto& n : t.nodes) {
    if (!n.is_leaf() && (n.left <= 0 || n.right <= 0 || n.left >= count || n.right >= count)) {
      throw DataError("tree node references a child outside the node array");
    }
  }
  if (t.nodes.empty()) throw DataError("tree has no nodes");
  return t;
}

inline json to_json(const TreeParams& p) {
  return {{"max_depth", p.max_depth},
          {"min_samples_leaf", p.min_samples_leaf},
          {"min_samples_split", p.min_samples_split},
          {"impurity", to_string(p.impurity)}};
}

inline TreeParams tree_params_from_json(const json& j) {
  return {j.at("max_depth").get<int>(), j.at("min_samples_leaf").get<std::size_t>(),
          j.at("min_samples_split").get<std::size_t>(), parse_impurity(j.at("impurity").get<std::string>())};
}

inline json to_json(const ForestParams& p) {
  return {{"n_trees", p.n_trees},
          {"max_depth", p.max_depth},
          {"min_samples_leaf", p.min_samples_leaf},
          {"min_samples_split", p.min_samples_split},
          {"feature_fraction", p.feature_fraction},
          {"bootstrap", p.bootstrap},
          {"impurity", to_string(p.impurity)},
          {"seed", p.seed}};
}

inline ForestParams forest_params_from_json(const json& j) {
  ForestParams p;
  p.n_trees = j.at("n_trees").get<int>();
  p.max_depth = j.at("max_depth").get<int>();
  p.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
  p.min_samples_split = j.at("min_samples_split").get<std::size_t>();
  p.feature_fraction = j.at("feature_fraction").get<double>();
  p.bootstrap = j.at("bootstrap").get<bool>();
  p.impurity = parse_impurity(j.at("impurity").get<std::string>());
  p.seed = j.at("seed").get<std::uint64_t>();
  return p;
}

inline json to_json(const GbdtParams& p) {
  json j = {{"n_rounds", p.n_rounds}, {"learning_rate", p.learning_rate}, {"growth", to_string(p.growth)}};
  if (p.growth == Growth::depthwise) {
    j["max_depth"] = p.max_depth;
  } else {
    j["max_leaves"] = p.max_leaves;
  }
  j["min_samples_leaf"] = p.min_samples_leaf;
  j["l2_reg"] = p.l2_reg;
  j["seed"] = p.seed;
  return j;
}

inline GbdtParams gbdt_params_from_json(const json& j) {
  GbdtParams p;
  p.n_rounds = j.at("n_rounds").get<int>();
  p.learning_rate = j.at("learning_rate").get<double>();
  p.growth = parse_growth(j.at("growth").get<std::string>());
  if (p.growth == Growth::depthwise) {
    p.max_depth = j.at("max_depth").get<int>();
  } else {
    p.max_leaves = j.at("max_leaves").get<int>();
  }
  p.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
  p.l2_reg = j.at("l2_reg").get<double>();
  p.seed = j.at("seed").get<std::uint64_t>();
  return p;
}

inline json to_json(const DecisionTree& t) {
  return {{"params", to_json(t.params)}, {"seed", t.seed}, {"n_classes", t.n_classes}, {"tree", to_json(t.tree)}};
}

inline DecisionTree decision_tree_from_json(const json& j) {
  return {tree_from_json(j.at("tree")), tree_params_from_json(j.at("params")), j.at("seed").get<std::uint64_t>(),
          j.at("n_classes").get<std::size_t>()};
}

// Hyperparameters of a payload as a JSON object (registry params column).
inline json params_json(const ModelPayload& payload) {
  return std::visit([](const auto& p) { return to_json(p.params); }, payload);
}

inline json to_json(const TrainedModel& m) {
  json j = {{"model_id", m.model_id},
            {"family", to_string(m.family)},
            {"seed", m.seed},
            {"valid_accuracy", m.valid_accuracy},
            {"params", params_json(m.payload)}};
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        j["n_classes"] = p.n_classes;
        if constexpr (std::is_same_v<T, DecisionTree>) {
          j["tree_seed"] = p.seed;
          j["tree"] = to_json(p.tree);
        } else if constexpr (std::is_same_v<T, RandomForest>) {
          json trees = json::array();
          for (const auto& t : p.trees) trees.push_back({{"seed", t.seed}, {"tree", to_json(t.tree)}});
          j["trees"] = std::move(trees);
        } else {
          j["base_score"] = p.base_score;
          json rounds = json::array();
          for (const auto& round : p.rounds) {
            json outs = json::array();
            for (const auto& t : round) outs.push_back(to_json(t));
            rounds.push_back(std::move(outs));
          }
          j["rounds"] = std::move(rounds);
        }
      },
      m.payload);
  return j;
}

inline TrainedModel model_from_json(const json& j) {
  TrainedModel m;
  m.model_id = j.at("model_id").get<std::uint64_t>();
  m.family = parse_family(j.at("family").get<std::string>());
  m.seed = j.at("seed").get<std::uint64_t>();
  m.valid_accuracy = j.at("valid_accuracy").get<double>();
  const auto n_classes = j.at("n_classes").get<std::size_t>();
  const auto& params = j.at("params");
  switch (m.family) {
    case Family::dtree:
      m.payload = DecisionTree{tree_from_json(j.at("tree")), tree_params_from_json(params),
                               j.at("tree_seed").get<std::uint64_t>(), n_classes};
      break;
    case Family::rforest: {
      RandomForest f{{}, forest_params_from_json(params), n_classes};
      for (const auto& t : j.at("trees")) {
        f.trees.push_back(DecisionTree{tree_from_json(t.at("tree")), f.params.tree_params(),
                                       t.at("seed").get<std::uint64_t>(), n_classes});
      }
      if (f.trees.empty()) throw DataError("forest payload has no trees");
      m.payload = std::move(f);
      break;
    }
    case Family::gbdt_depthwise:
    case Family::gbdt_leafwise: {
      GradientBoosting g;
      g.params = gbdt_params_from_json(params);
      g.n_classes = n_classes;
      g.base_score = j.at("base_score").get<std::vector<double>>();
      for (const auto& round : j.at("rounds")) {
        std::vector<Tree> outs;
        for (const auto& t : round) outs.push_back(tree_from_json(t));
        g.rounds.push_back(std::move(outs));
      }
      m.payload = std::move(g);
      break;
    }
  }
  return m;
}

}  // namespace rashomon
