#include "deconfound/cli/cli.hpp"

int main(int argc, char** argv) { return dcfd::cli::run(argc, argv); }
