#include "bosim/cli.hpp"

int main(int argc, char** argv) { return bosim::run_cli(argc, argv); }
