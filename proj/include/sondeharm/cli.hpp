#pragma once

#include <ostream>

namespace sondeharm {

/// Entry point of the sondeharm command line tool. Returns the process exit
/// code: 0 success, 1 usage or configuration error, 2 data error, 3
/// numerical failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sondeharm
