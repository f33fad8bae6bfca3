#include <iostream>

#include "weakh/cli/cli.hpp"

int main(int argc, char** argv) { return weakh::cli::run(argc, argv, std::cout, std::cerr); }
