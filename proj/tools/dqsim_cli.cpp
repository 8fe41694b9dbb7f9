#include <iostream>

#include "dqsim/cli.hpp"

int main(int argc, char** argv) { return dqsim::run_cli(argc, argv, std::cout, std::cerr); }
