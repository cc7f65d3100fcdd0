#include "stopsim/cli.hpp"

int main(int argc, char** argv) { return stopsim::cli::run_cli(argc, argv); }
