#include <iostream>

#include "reachlab/cli.hpp"

int main(int argc, char** argv) { return reachlab::cli::run(argc, argv, std::cout, std::cerr); }
