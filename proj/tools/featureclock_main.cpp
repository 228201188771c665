#include "featureclock/cli.hpp"

int main(int argc, char** argv) { return featureclock::cli::run_cli(argc, argv); }
