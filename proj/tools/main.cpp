#include "gmrfglm/cli.hpp"

int main(int argc, char **argv) { return gmrfglm::cli_main(argc, argv); }
