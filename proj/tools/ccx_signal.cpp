#include "main_common.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args{"signal"};
  args.insert(args.end(), argv + 1, argv + argc);
  return ccx::tools::run_main(args);
}
