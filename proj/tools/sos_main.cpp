#include "sos/cli.hpp"

int main(int argc, char** argv) { return sos::cli_dispatch(argc, argv); }
