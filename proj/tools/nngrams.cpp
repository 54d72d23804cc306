#include "nngrams/cli.hpp"

int main(int argc, char** argv) { return nngrams::run_cli(argc, argv); }
