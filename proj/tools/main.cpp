#include "factorcast/cli/cli.hpp"

int main(int argc, char** argv) { return factorcast::cli::run(argc, argv); }
