#include <iostream>

#include "mquine/cli.hpp"

int main(int argc, char** argv) { return mquine::run_cli(argc, argv, std::cout, std::cerr); }
