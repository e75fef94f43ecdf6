#include <string>
#include <vector>

#include "cheapctl/harness.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cheapctl::run_cli(args);
}
