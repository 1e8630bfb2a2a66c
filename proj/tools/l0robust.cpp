#include "l0robust/cli.hpp"

#include <iostream>

int main(int argc, char **argv) { return l0robust::cli::run(argc, argv, std::cout, std::cerr); }
