#include "cnm/cli.hpp"

int main(int argc, char** argv) { return cnm::cli::run(argc, argv); }
