#include <iostream>

#include "mvrf/cli.hpp"

int main(int argc, char** argv) { return mvrf::cli::run(argc, argv, std::cout, std::cerr); }
