#include <iostream>

#include "stmm/cli.hpp"

int main(int argc, char** argv) {
    return stmm::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
