#include <iostream>

#include "cli.hpp"
#include "lgrn/runtime.hpp"

int main(int argc, char** argv) {
  lgrn::configure_allocator();
  std::vector<std::string> args(argv + 1, argv + argc);
  return lgrn::cli::run(args, std::cout, std::cerr);
}
