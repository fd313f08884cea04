#include "impulse/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return impulse::run_cli(argc, argv, std::cout, std::cerr); }
