#include "anderson/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return anderson::run_cli(argc, argv, std::cout, std::cerr); }
