#include <iostream>

#include "winf/cli.hpp"

int main(int argc, char** argv) { return winf::run_cli(argc, argv, std::cout, std::cerr); }
