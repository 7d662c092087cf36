#include "canspec/cli.hpp"

int main(int argc, char** argv) { return canspec::cli::run(argc, argv); }
