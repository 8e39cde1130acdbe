#include "spinorbit/cli.hpp"

int main(int argc, char** argv) { return spinorbit::run_cli(argc, argv); }
