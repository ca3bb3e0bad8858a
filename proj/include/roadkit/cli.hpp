#pragma once

namespace roadkit {

/// Entry point shared by the executable and the tests. Returns 0 on success,
/// 1 for usage or configuration errors, 2 for runtime failures.
int run_cli(int argc, const char* const* argv);

}  // namespace roadkit
