#include "rrll/cli.hpp"

int main(int argc, char** argv) { return rrll::run_cli(argc, argv); }
