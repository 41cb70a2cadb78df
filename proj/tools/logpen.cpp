#include "logpen/cli.hpp"

int main(int argc, char** argv) { return logpen::cli::run(argc, argv); }
