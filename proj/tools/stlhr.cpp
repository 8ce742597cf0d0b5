#include "stlhr/cli.hpp"

int main(int argc, char** argv) { return stlhr::run_cli(argc, argv); }
