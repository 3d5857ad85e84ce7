#pragma once

#include <nlohmann/json.hpp>

#include "bem/metrics.hpp"

namespace bem::detail {

nlohmann::ordered_json report_json(const EvalReport& report);

}  // namespace bem::detail
