#pragma once

namespace gmrfglm {

/// Command-line entry point. Returns 0 on success, 1 on a usage error and
/// 2 on a runtime error.
int cli_main(int argc, char **argv);

} // namespace gmrfglm
