#pragma once

#include <filesystem>

#include <json.hpp>

#include "polca/hierarchy.hpp"

namespace polca {

/// Condition objects map feature names to one value or a list of values
/// (labels or indices); the reserved key "any_of" holds a list of
/// alternative conditions.
Condition condition_from_json(const nlohmann::json& doc);
nlohmann::json condition_to_json(const Condition& condition);

/// {"root": id, "nodes": [{"id", "children", "pseudo_rewards"?, "terminal"?,
/// "relevant_features"?}, ...]}
TaskGraph task_graph_from_json(const nlohmann::json& doc);
nlohmann::json task_graph_to_json(const TaskGraph& graph);

TaskGraph load_task_graph(const std::filesystem::path& path);
void save_task_graph(const TaskGraph& graph, const std::filesystem::path& path);

/// Per-subtask cluster lists, solver artifact (values and Q, or alpha vectors)
/// and greedy tables. Projected models are not stored.
nlohmann::json policy_to_json(const HierarchicalPolicy& policy);
HierarchicalPolicy policy_from_json(const nlohmann::json& doc);

HierarchicalPolicy load_policy(const std::filesystem::path& path);
void save_policy(const HierarchicalPolicy& policy, const std::filesystem::path& path);

} // namespace polca
