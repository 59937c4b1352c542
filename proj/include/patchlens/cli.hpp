#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "patchlens/tracealign.hpp"

namespace patchlens::cli {

// Runs one command. Exit status: 0 success, 1 domain error, 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Aligned text rendering of comparison tables. Cells carry color tags
// ([R], [G1]..[G4]); cells merged into their left neighbour print "<<".
std::string render_tables(const std::vector<tracealign::ComparisonTable>& tables);

// Applies PATCHLENS_LOG (trace|debug|info|warn|error|off) to the stderr logger.
void init_logging();

}  // namespace patchlens::cli
