#include <iostream>

#include "jdsr/commands.hpp"

int main(int argc, char** argv) { return jdsr::cli::run(argc, argv, std::cout, std::cerr); }
