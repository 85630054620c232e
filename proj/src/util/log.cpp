#include "genrank/util/log.hpp"

#include <cstdlib>

#include <spdlog/sinks/stdout_sinks.h>

namespace genrank {

spdlog::logger& log() {
  static auto logger = [] {
    auto l = spdlog::stderr_logger_st("genrank");
    l->set_pattern("[%l] %v");
    const char* level = std::getenv("GENRANK_LOG");
    l->set_level(level != nullptr ? spdlog::level::from_str(level) : spdlog::level::info);
    return l;
  }();
  return *logger;
}

}  // namespace genrank
