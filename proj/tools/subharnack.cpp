#include "subharnack/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return subharnack::cli::run(argc, argv, std::cout, std::cerr); }
