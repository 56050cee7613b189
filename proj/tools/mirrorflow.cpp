#include <iostream>

#include "mirrorflow/cli.hpp"

int main(int argc, char** argv) { return mirrorflow::cli::run(argc, argv, std::cout, std::cerr); }
