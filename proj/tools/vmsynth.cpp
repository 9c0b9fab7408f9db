#include <iostream>

#include "vmsynth/cli.hpp"

int main(int argc, char** argv) { return vmsynth::cli::run(argc, argv, std::cout, std::cerr); }
