#include "entmark/cli.hpp"

int main(int argc, char** argv) { return entmark::cli::run(argc, argv); }
