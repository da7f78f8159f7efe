#include "degbench/cli.hpp"

int main(int argc, char** argv) { return degbench::cli::dispatch(argc, argv); }
