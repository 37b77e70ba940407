#include "stapdp/cli.hpp"

int main(int argc, char** argv) { return stapdp::cli_main(argc, argv); }
