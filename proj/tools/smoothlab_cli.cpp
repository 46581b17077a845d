#include <iostream>

#include "smoothlab/lab/cli.hpp"

int main(int argc, char** argv) { return smoothlab::lab::cli_main(argc, argv, std::cout, std::cerr); }
