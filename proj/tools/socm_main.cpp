#include <iostream>

#include "socm/cli.hpp"

int main(int argc, char** argv) { return socm::run_cli(argc, argv, std::cout, std::cerr); }
