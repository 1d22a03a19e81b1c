#include "acs/cli.hpp"

int main(int argc, char** argv) { return acs::cli_main(argc, argv); }
