#include <iostream>

#include "nefqvf/cli.hpp"

int main(int argc, char** argv) { return nefqvf::run(argc, argv, std::cout, std::cerr); }
