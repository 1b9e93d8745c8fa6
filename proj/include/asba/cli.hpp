#pragma once

namespace asba {

// Full command-line surface; returns the process exit code
// (0 ok, 1 usage, 2 data error, 3 numeric failure).
int cli_main(int argc, const char* const* argv);

}  // namespace asba
