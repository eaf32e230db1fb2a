#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return kftam::cli::cli_main(argc, argv, std::cerr); }
