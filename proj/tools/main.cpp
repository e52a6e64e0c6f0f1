#include <iostream>

#include "iib/cli.hpp"

int main(int argc, char** argv) { return iib::cli::run(argc, argv, std::cout, std::cerr); }
