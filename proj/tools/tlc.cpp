// tlc.cpp - command-line front end

#include <iostream>

#include "tlc/cli_io.hpp"

int main(int argc, char** argv) { return tlc::run(argc, argv, std::cout, std::cerr); }
