#include <iostream>

#include "octwarp/cli.hpp"

int main(int argc, char** argv) { return octwarp::run_cli(argc, argv, std::cout, std::cerr); }
