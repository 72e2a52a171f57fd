#include "hast/cli.hpp"

int main(int argc, char** argv) { return hast::cli::main(argc, argv); }
