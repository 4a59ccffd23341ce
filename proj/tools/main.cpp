#include "cli.hpp"

int main(int argc, char** argv) {
  return stp::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
