#include <iostream>
#include <string>
#include <vector>

#include "tabcheck/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return tabcheck::run_cli(args, std::cout, std::cerr);
}
