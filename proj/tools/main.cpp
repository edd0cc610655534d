#include "rfsei/cli.hpp"

int main(int argc, char** argv) { return rfsei::cli::run(argc, argv); }
