#include "autohas/cli.hpp"

int main(int argc, char** argv) { return autohas::run_cli(argc, argv); }
