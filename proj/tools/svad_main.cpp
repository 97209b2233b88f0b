#include "svad/cli.hpp"

int main(int argc, char** argv) { return svad::run_command(argc, argv); }
