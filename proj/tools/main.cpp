#include "vshape/cli.hpp"

int main(int argc, char** argv) { return vshape::cli::run(argc, argv); }
