#include <cstdlib>
#include <iostream>

#include "nmforge/verify.hpp"

// Prints one line per criterion; exits nonzero if any fails. Arguments, when
// given, select criteria by number.
int main(int argc, char** argv) {
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
    auto results = nmforge::run_acceptance(std::cout, only);
    std::size_t passed = 0;
    for (const auto& r : results) passed += r.pass();
    std::cout << passed << "/" << results.size() << " criteria pass" << std::endl;
    return passed == results.size() ? 0 : 1;
}
