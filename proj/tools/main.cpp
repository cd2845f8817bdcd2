#include "pgsbm/cli.hpp"

int main(int argc, char** argv) { return pgsbm::run_cli(argc, argv); }
