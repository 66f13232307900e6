#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return lfd::cli::dispatch(argc, argv, std::cout, std::cerr); }
