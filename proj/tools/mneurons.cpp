#include "mn/cli.hpp"

int main(int argc, char** argv) { return mn::cli::run(argc, argv); }
