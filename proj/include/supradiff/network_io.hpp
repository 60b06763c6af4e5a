#pragma once

#include "supradiff/network.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace supradiff {

struct NetworkFile {
  InterconnectedNetwork network;
  std::optional<DiffusionConstants> constants;
};

// Schema: docs/network_format.md. Throws ValidationError on any violation.
NetworkFile parse_network(std::string_view json_text);
NetworkFile load_network(const std::filesystem::path& path);

std::string dump_network(const InterconnectedNetwork& network,
                         const DiffusionConstants* constants = nullptr);

std::string dump_constants(const DiffusionConstants& constants);
DiffusionConstants parse_constants(std::string_view json_text);

}  // namespace supradiff
