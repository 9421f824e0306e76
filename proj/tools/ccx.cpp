#include "main_common.hpp"

int main(int argc, char** argv) { return ccx::tools::run_main({argv + 1, argv + argc}); }
