#include "cascadegp/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return cascadegp::cli::run(argc, argv, std::cout, std::cerr); }
