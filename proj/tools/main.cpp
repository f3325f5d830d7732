#include <string>
#include <vector>

#include "digitour/cli.hpp"

int main(int argc, char** argv) {
  return digitour::run_subcommand(std::vector<std::string>(argv, argv + argc));
}
