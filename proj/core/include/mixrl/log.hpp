#pragma once

#include <functional>
#include <string_view>

namespace mixrl {

enum class LogLevel { Info, Warning, Error };

using LogSink = std::function<void(LogLevel, std::string_view)>;

// Replaces the process-wide sink (default: std::clog). Returns the previous one.
LogSink set_log_sink(LogSink sink);

void log(LogLevel level, std::string_view message);
inline void log_warning(std::string_view message) { log(LogLevel::Warning, message); }

}  // namespace mixrl
