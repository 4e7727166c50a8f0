// Standalone entry point for the acceptance gate. --fast selects the
// sub-10-minute criteria; --criterion N [N...] selects an explicit set.

#include <cstring>
#include <iostream>
#include <string>

#include "acceptance_impl.hpp"

int main(int argc, char** argv) {
  accept::Options opt;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--fast") {
      opt.fast = true;
    } else if (a == "--criterion") {
      for (int j = i + 1; j < argc && argv[j][0] != '-'; ++j, ++i)
        opt.criteria.push_back(std::atoi(argv[j]));
    } else {
      std::cerr << "usage: acceptance [--fast] [--criterion N ...]\n";
      return 2;
    }
  }
  return accept::run(opt);
}
