#include <iostream>

#include "fwcorpus/cli.hpp"

int main(int argc, char** argv) { return fwcorpus::cli::run(argc, argv, std::cout, std::cerr); }
