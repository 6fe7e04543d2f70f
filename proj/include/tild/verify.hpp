#pragma once

#include <ostream>

namespace tild {

// Runs the oracle suite (finite differences vs analytic scores, grid prox vs
// the iterative prox, Monte Carlo vs the analytic convolution path, closed
// forms, determinism) and prints one table row per check. Returns true iff
// every check passes.
bool run_verification(std::ostream& out);

}  // namespace tild
