#include "cli.hpp"

int main(int argc, char** argv) { return liberation::cli::run(argc, argv); }
