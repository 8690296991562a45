#pragma once

#include <functional>
#include <string>

namespace curricula {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

/// Process-wide logger. Verbosity comes from the CURRICULA_LOG environment
/// variable (error|warn|info|debug); default is warn. Tests may install a
/// sink to capture messages.
class Log {
 public:
  using Sink = std::function<void(LogLevel, const std::string&)>;

  static void write(LogLevel level, const std::string& message);
  static void set_level(LogLevel level);
  static LogLevel level();
  /// Replaces the output sink; pass nullptr to restore stderr output.
  static void set_sink(Sink sink);
};

inline void log_error(const std::string& m) { Log::write(LogLevel::Error, m); }
inline void log_warn(const std::string& m) { Log::write(LogLevel::Warn, m); }
inline void log_info(const std::string& m) { Log::write(LogLevel::Info, m); }
inline void log_debug(const std::string& m) { Log::write(LogLevel::Debug, m); }

}  // namespace curricula
