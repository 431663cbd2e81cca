#include <string>
#include <vector>

#include "cnmf/cli.hpp"

int main(int argc, char** argv) {
  return cnmf::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
