#include <iostream>

#include "ksgan_cli/commands.hpp"

int main(int argc, char** argv) { return ksgan::cli::run(argc, argv, std::cout, std::cerr); }
