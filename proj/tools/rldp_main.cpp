#include "rldp_cli/cli.hpp"

int main(int argc, char** argv) { return rldp::cli::main(argc, argv); }
