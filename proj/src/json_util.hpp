#pragma once

#include "supradiff/network.hpp"

#include <json.hpp>

namespace supradiff::detail {

DiffusionConstants constants_from_json(const nlohmann::json& j);
nlohmann::json constants_to_json(const DiffusionConstants& c);

}  // namespace supradiff::detail
