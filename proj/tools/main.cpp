#include <iostream>

#include "radiofp/cli.hpp"

int main(int argc, char** argv) { return radiofp::run_cli(argc, argv, std::cout, std::cerr); }
