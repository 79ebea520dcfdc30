#include <iostream>

#include "sats_cli/cli.hpp"

int main(int argc, char** argv) { return sats::cli::run(argc, argv, std::cout, std::cerr); }
