#include "patchstyle/cli.hpp"

int main(int argc, char** argv) { return patchstyle::cli::main(argc, argv); }
