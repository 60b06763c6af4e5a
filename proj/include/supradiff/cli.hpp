#pragma once

namespace supradiff {

// Exit codes: 0 success, 2 validation failure, 3 numerical failure, 1 anything else.
int run_cli(int argc, char** argv);

}  // namespace supradiff
