#include "ragpipe/cli.hpp"

int main(int argc, char** argv) { return ragpipe::cli::run_cli(argc, argv); }
