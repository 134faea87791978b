#include <iostream>
#include <string>
#include <vector>

#include "rpl/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return rpl::dispatch(args, std::cout, std::cerr);
}
