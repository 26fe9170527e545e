#pragma once

#include <string>

namespace floq::log {

// Diagnostics controlled by the FLOQUET_LINDBLAD_LOG environment variable:
// unset/"off" = silent, "info" = coarse progress, "debug" = verbose.
// Output goes to stderr so machine-readable stdout stays clean.

bool info_enabled();
bool debug_enabled();
void info(const std::string& msg);
void debug(const std::string& msg);

}  // namespace floq::log
