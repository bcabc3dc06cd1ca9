#include <vector>

#include "leomap/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return leomap::run_cli(args);
}
