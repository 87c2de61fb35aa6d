#include "metatune/cli.hpp"

int main(int argc, char** argv) { return metatune::run_command(argc, argv); }
