#include "essi/cli.hpp"

int main(int argc, char** argv) { return essi::cli::run(argc, argv); }
