#include "cli.hpp"

int main(int argc, char** argv) { return sizer::cli::cli_main(argc, argv); }
