#include "supradiff/cli.hpp"

int main(int argc, char** argv) { return supradiff::run_cli(argc, argv); }
