#include "rtcap/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return rtcap::cli::dispatch(argc, argv, std::cout, std::cerr); }
