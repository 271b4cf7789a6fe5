#include <iostream>

#include "phi4/cli.hpp"

int main(int argc, char** argv) { return phi4::cli_dispatch(argc, argv, std::cout, std::cerr); }
