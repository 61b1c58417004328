#include "flowcast/cli.hpp"

int main(int argc, char** argv) { return flowcast::cli::main_entry(argc, argv); }
