#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace sepia {

// Exit codes: 0 success, 1 usage or input error, 2 backend error,
// 3 search finished without a proof.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sepia
