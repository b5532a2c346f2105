#include "nljc/cli.hpp"

int main(int argc, char** argv) { return nljc::run_cli(argc, argv); }
