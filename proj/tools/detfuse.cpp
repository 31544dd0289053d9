#include <iostream>

#include "detfuse/cli.hpp"

int main(int argc, char** argv) { return detfuse::cli::run(argc, argv, std::cout, std::cerr); }
