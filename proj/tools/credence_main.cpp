#include <vector>
#include <string>

#include "credence/cli.hpp"

int main(int argc, char** argv) {
  return credence::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
