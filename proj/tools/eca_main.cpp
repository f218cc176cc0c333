#include "eca/cli.hpp"

int main(int argc, char** argv) { return eca::cli::run(argc, argv); }
