#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ctxvol {

/// Base of all library errors.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Bad or inconsistent configuration (ranges, missing files, h > T).
class ConfigError : public Error {
public:
  using Error::Error;
};

/// Unreadable or ambiguous input data.
class InputError : public Error {
public:
  using Error::Error;
};

/// Warnings and informational messages go through one replaceable sink so
/// callers (and tests) can capture them.
class Log {
public:
  enum class Level { info, warning };
  using Sink = std::function<void(Level, std::string_view)>;

  static void set_sink(Sink sink) {
    std::lock_guard lock(mutex());
    sink_ref() = std::move(sink);
  }

  static void reset() { set_sink(nullptr); }

  static void warn(std::string_view msg) { emit(Level::warning, msg); }
  static void info(std::string_view msg) { emit(Level::info, msg); }

private:
  static void emit(Level level, std::string_view msg) {
    std::lock_guard lock(mutex());
    if (sink_ref()) {
      sink_ref()(level, msg);
      return;
    }
    std::cerr << (level == Level::warning ? "warning: " : "") << msg << '\n';
  }

  static std::mutex &mutex() {
    static std::mutex m;
    return m;
  }

  static Sink &sink_ref() {
    static Sink s;
    return s;
  }
};

} // namespace ctxvol
