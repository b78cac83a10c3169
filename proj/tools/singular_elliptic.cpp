#include <iostream>

#include "singell/cli.hpp"

int main(int argc, char** argv) { return singell::run_cli(argc, argv, std::cout, std::cerr); }
