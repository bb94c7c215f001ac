#include "cseg/cli.hpp"

int main(int argc, char** argv) { return cseg::cli::run(argc, argv); }
