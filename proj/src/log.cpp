#include "floq/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace floq::log {

namespace {

enum Level { kOff = 0, kInfo = 1, kDebug = 2 };

Level level() {
    static const Level lvl = [] {
        const char* env = std::getenv("FLOQUET_LINDBLAD_LOG");
        if (!env) return kOff;
        if (std::strcmp(env, "debug") == 0) return kDebug;
        if (std::strcmp(env, "info") == 0) return kInfo;
        return kOff;
    }();
    return lvl;
}

}  // namespace

bool info_enabled() { return level() >= kInfo; }
bool debug_enabled() { return level() >= kDebug; }

void info(const std::string& msg) {
    if (info_enabled()) std::fprintf(stderr, "[floquet-lindblad] %s\n", msg.c_str());
}

void debug(const std::string& msg) {
    if (debug_enabled()) std::fprintf(stderr, "[floquet-lindblad] %s\n", msg.c_str());
}

}  // namespace floq::log
