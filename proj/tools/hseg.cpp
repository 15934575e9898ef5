#include <iostream>

#include "hseg/cli/commands.hpp"

int main(int argc, char** argv) { return hseg::cli::run(argc, argv, std::cout, std::cerr); }
