#include "asls/cli/cli.hpp"

int main(int argc, char** argv) { return asls::cli::main(argc, argv); }
