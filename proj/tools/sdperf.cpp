#include <iostream>

#include "sdperf/cli.hpp"

int main(int argc, char** argv) { return sdperf::cli::run(argc, argv, std::cout, std::cerr); }
