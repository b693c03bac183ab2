#include <string>
#include <vector>

#include "qrepair/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return qrepair::cli::run_cli(args);
}
