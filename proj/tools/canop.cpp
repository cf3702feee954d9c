#include <iostream>

#include "canop/cli/commands.hpp"

int main(int argc, char** argv) { return canop::cli::run_cli(argc, argv, std::cout, std::cerr); }
