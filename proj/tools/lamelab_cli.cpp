#include "lamelab/cli.hpp"

int main(int argc, char** argv) { return lamelab::cli_main(argc, argv); }
