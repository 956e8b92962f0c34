#include <iostream>

#include "fracinv/cli.hpp"

int main(int argc, char** argv) { return fracinv::cli::run(argc, argv, std::cout, std::cerr); }
