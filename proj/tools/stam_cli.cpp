#include <iostream>

#include "stam/cli.hpp"

int main(int argc, char** argv) {
  return stam::cli::dispatch(argc, argv, std::cout, std::cerr);
}
