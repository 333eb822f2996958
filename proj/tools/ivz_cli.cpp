#include "ivz/cli/cli.hpp"

int main(int argc, char** argv) { return ivz::cli::run(argc, argv); }
