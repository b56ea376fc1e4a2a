#include "bralt/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return bralt::main_entry(argc, argv, std::cout, std::cerr); }
