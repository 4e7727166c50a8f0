#pragma once
// Acceptance gate: ten numbered criteria, each printed PASS/FAIL with
// the measured numbers. Shared between the `acceptance` test binary and
// the CLI `verify` verb.

#include <vector>

namespace accept {

struct Options {
  bool fast = false;            // criteria {1,2,3,4,5,10} only
  std::vector<int> criteria;    // explicit subset; overrides fast
};

// Returns 0 iff every selected criterion passes.
int run(const Options& opt);

}  // namespace accept
