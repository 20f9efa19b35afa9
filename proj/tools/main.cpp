#include "lazysusan/cli.hpp"

int main(int argc, char** argv) { return lazysusan::run_cli(argc, argv); }
