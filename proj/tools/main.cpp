#include "esnssm/cli.hpp"

int main(int argc, char** argv) { return esnssm::cli::run(argc, argv); }
