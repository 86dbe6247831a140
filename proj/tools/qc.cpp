#include <iostream>

#include "qc/cli.hpp"

int main(int argc, char** argv) { return qc::cli::run(argc, argv, std::cout, std::cerr); }
