#pragma once

#include <functional>
#include <string_view>

namespace vcd::log {

enum class Level { Debug, Info, Warning, Error };

using Sink = std::function<void(Level, std::string_view)>;

// Replaces the process-wide sink; returns the previous one. The default sink
// writes warnings and errors to stderr.
Sink set_sink(Sink sink);

void write(Level level, std::string_view message);

inline void warn(std::string_view message) { write(Level::Warning, message); }
inline void info(std::string_view message) { write(Level::Info, message); }

}  // namespace vcd::log
