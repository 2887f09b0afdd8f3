#include <iostream>

#include "dhl_cli/cli.hpp"

int main(int argc, char** argv) { return dhl::cli::run(argc, argv, std::cout, std::cerr); }
