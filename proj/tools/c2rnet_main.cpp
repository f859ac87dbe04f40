#include "c2rnet/cli.hpp"

int main(int argc, char** argv) {
  return c2rnet::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
