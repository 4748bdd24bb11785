#include "cehr/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return cehr::cli::run(argc, argv, std::cout, std::cerr); }
