#include "cli.hpp"

int main(int argc, char** argv) { return dirlab::cli::run(argc, argv); }
