#include "plfm/cli.hpp"

int main(int argc, char** argv) { return plfm::cli_main(argc, argv); }
