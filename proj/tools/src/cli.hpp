#pragma once

namespace sizer::cli {

/// Entry point of the `sizer` tool. Returns 0 on success, 1 on a usage or
/// validation error and 2 on a runtime failure.
int cli_main(int argc, char** argv);

}  // namespace sizer::cli
