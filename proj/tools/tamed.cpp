#include "tamed/cli.hpp"

int main(int argc, char** argv) { return tamed::cli::parse_and_dispatch(argc, argv); }
