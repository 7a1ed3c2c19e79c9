#include "dq/cli.hpp"

int main(int argc, char** argv) { return dq::cli_dispatch(argc, argv); }
