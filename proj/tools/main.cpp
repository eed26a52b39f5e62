#include "subshap/cli.hpp"

int main(int argc, char** argv) { return subshap::run_cli(argc, argv); }
