#include <iostream>

#include "sondeharm/cli.hpp"

int main(int argc, char** argv) { return sondeharm::run_cli(argc, argv, std::cout, std::cerr); }
