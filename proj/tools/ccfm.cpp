#include "ccfm/cli.hpp"

int main(int argc, char** argv) { return ccfm::run_cli(argc, argv); }
