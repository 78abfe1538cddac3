#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) {
  return forum_sentinel::cli::run(argc, argv, std::cout, std::cerr);
}
