#include <vector>

#include "repartee/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return repartee::run_command(args);
}
