#include "dqm/cli.hpp"

int main(int argc, char** argv) { return dqm::cli::main(argc, argv); }
