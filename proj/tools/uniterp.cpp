#include "uniterp/cli.hpp"

int main(int argc, char** argv) { return uniterp::cli_main(argc, argv); }
