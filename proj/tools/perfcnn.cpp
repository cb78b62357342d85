#include <vector>

#include "perfcnn/cli.hpp"

int main(int argc, char** argv) {
  return perfcnn::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
