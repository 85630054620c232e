#pragma once

#include <spdlog/spdlog.h>

namespace genrank {

// Shared stderr logger. Level comes from GENRANK_LOG
// (trace|debug|info|warn|error|off), default info.
spdlog::logger& log();

}  // namespace genrank
