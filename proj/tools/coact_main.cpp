#include <iostream>

#include "coact/cli.hpp"

int main(int argc, char** argv) { return coact::cli::run(argc, argv, std::cout, std::cerr); }
