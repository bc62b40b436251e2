#include "rallypose/cli.hpp"

int main(int argc, char** argv) { return rallypose::run_cli(argc, argv); }
