#include "camkit/cli.hpp"

int main(int argc, char** argv) { return camkit::cli::run(argc, argv); }
