#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "json.hpp"
#include "tp2dp2/core.hpp"

namespace tp2dp2 {

// One JSON object per line: {"id", "T", "label"?, "events": [{"t", "d"}]} with
// 1-based types. D is the larger of the metadata "num_types" and the largest
// observed type.
[[nodiscard]] Dataset parse_dataset(std::istream& in, const nlohmann::ordered_json& metadata = {});
void write_dataset(std::ostream& out, const Dataset& data);

[[nodiscard]] nlohmann::ordered_json sequence_to_json(const EventSequence& seq);
[[nodiscard]] EventSequence sequence_from_json(const nlohmann::json& j);

// The sidecar for "x/data.jsonl" is "x/data.meta.json".
[[nodiscard]] std::filesystem::path metadata_path(const std::filesystem::path& dataset_path);

// Reads the dataset and, when present, its metadata sidecar.
[[nodiscard]] Dataset load_dataset(const std::filesystem::path& path);
// Writes the dataset and its metadata sidecar.
void save_dataset(const std::filesystem::path& path, const Dataset& data);

[[nodiscard]] nlohmann::ordered_json basis_to_json(const BasisConfig& basis);
[[nodiscard]] BasisConfig basis_from_json(const nlohmann::json& j);

// {"mu": [...], "a": [D][D][n_basis], "basis": {...}}
[[nodiscard]] nlohmann::ordered_json params_to_json(const HawkesParams& params);
[[nodiscard]] HawkesParams params_from_json(const nlohmann::json& j);

[[nodiscard]] nlohmann::ordered_json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::ordered_json& j);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace tp2dp2
