#include <string>
#include <vector>

#include "sdtp/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return sdtp::cli::run(args);
}
