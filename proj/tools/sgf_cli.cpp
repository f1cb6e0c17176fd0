#include "sgf/experiments.hpp"

#include <string>
#include <vector>

int main(int argc, char** argv) {
  return sgf::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
