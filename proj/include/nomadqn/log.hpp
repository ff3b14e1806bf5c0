#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace nomadqn {

enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };

// Level comes from NOMA_DQN_LOG (quiet|info|debug), default info.
inline LogLevel log_level() {
    static const LogLevel level = [] {
        const char* v = std::getenv("NOMA_DQN_LOG");
        if (!v) return LogLevel::Info;
        if (std::strcmp(v, "quiet") == 0 || std::strcmp(v, "0") == 0)
            return LogLevel::Quiet;
        if (std::strcmp(v, "debug") == 0 || std::strcmp(v, "2") == 0)
            return LogLevel::Debug;
        return LogLevel::Info;
    }();
    return level;
}

inline void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::Info) std::fprintf(stderr, "[info] %s\n", msg.c_str());
}

inline void log_debug(const std::string& msg) {
    if (log_level() >= LogLevel::Debug) std::fprintf(stderr, "[debug] %s\n", msg.c_str());
}

}  // namespace nomadqn
