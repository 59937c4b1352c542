#include <iostream>

#include "patchlens/cli.hpp"

int main(int argc, char** argv) {
  patchlens::cli::init_logging();
  return patchlens::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
