#include "ykrl/cli.hpp"

int main(int argc, char** argv) { return ykrl::run_cli(argc, argv); }
