#include <iostream>

#include "vcd/cli.hpp"

int main(int argc, char** argv) { return vcd::run_cli(argc, argv, std::cout, std::cerr); }
