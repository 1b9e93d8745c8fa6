#include "asba/cli.hpp"

int main(int argc, char** argv) { return asba::cli_main(argc, argv); }
