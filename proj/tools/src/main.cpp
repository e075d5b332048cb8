#include <iostream>

#include "elcap_cli/commands.hpp"

int main(int argc, char** argv) { return elcap::cli::run_cli(argc, argv, std::cout, std::cerr); }
