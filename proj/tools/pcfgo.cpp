#include <iostream>

#include "pcfgo/cli.hpp"

int main(int argc, char** argv) { return pcfgo::cli::run(argc, argv, std::cout, std::cerr); }
