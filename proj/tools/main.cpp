#include "cli.hpp"

int main(int argc, char** argv) { return cellfclust::cli::main(argc, argv); }
