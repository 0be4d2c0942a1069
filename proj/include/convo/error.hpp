#pragma once

#include <iostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace convo {

/// Fatal pipeline error. `stage` names the pipeline stage when known.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what, std::string stage = {})
      : std::runtime_error(what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

namespace log {

enum class Level { kQuiet = 0, kWarn = 1, kInfo = 2 };

inline Level& level() {
  static Level lvl = Level::kWarn;
  return lvl;
}

inline void warn(std::string_view msg) {
  if (level() >= Level::kWarn) std::clog << "[warn] " << msg << '\n';
}

inline void info(std::string_view msg) {
  if (level() >= Level::kInfo) std::clog << "[info] " << msg << '\n';
}

}  // namespace log

}  // namespace convo
