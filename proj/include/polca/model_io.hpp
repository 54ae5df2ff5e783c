#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "polca/model.hpp"

namespace polca {

/// Parses the JSON model format. States may be flat indices or
/// feature-assignment objects; actions and observations may be names or
/// indices. Transitions are either sparse [s, a, s', p] quadruples or an
/// object of per-action dense matrices. A missing discount defaults to 0.95.
/// Throws InvalidInput on malformed documents; does not validate
/// probability sums (see validate_model).
DecisionModel model_from_json(const nlohmann::json& doc);

/// Canonical emission: flat indices, nonzero entries only, ascending order.
nlohmann::json model_to_json(const DecisionModel& model);

DecisionModel load_model(const std::filesystem::path& path);
void save_model(const DecisionModel& model, const std::filesystem::path& path);

// Shared helpers for files that embed JSON documents.
nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const nlohmann::json& doc, const std::filesystem::path& path);

} // namespace polca
