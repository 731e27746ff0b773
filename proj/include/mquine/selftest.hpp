#pragma once

#include <cstddef>
#include <ostream>
#include <random>

namespace mquine {

/// Largest relative deviation, |a - f| / max(1, |a|, |f|), between the
/// analytic quintuple-score gradient (through the packed lower-triangular
/// entity parameters) and central finite differences on one random instance.
double quintuple_gradient_error(std::size_t d, std::mt19937_64& rng, double step = 1e-6);

/// Counterexample scores plus gradient checks over d in {2, 3, 5}; prints
/// one line per check and returns whether all passed.
bool run_selftest(std::ostream& out, std::uint64_t seed = 0);

}  // namespace mquine
