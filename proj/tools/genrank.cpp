#include <iostream>

#include "genrank/cli/app.hpp"

int main(int argc, char** argv) { return genrank::cli::run(argc, argv, std::cout, std::cerr); }
