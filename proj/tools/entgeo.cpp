#include <iostream>

#include "entgeo/cli.hpp"

int main(int argc, char** argv) { return entgeo::cli::run(argc, argv, std::cout, std::cerr); }
