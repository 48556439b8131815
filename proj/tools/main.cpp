#include "pcotdr/cli.hpp"

int main(int argc, char** argv) { return pcotdr::run_cli(argc, argv); }
