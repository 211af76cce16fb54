#include <iostream>

#include "helprank/cli/cli.hpp"

int main(int argc, char** argv) { return helprank::cli::run_cli(argc, argv, std::cout, std::cerr); }
