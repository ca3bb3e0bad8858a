#include "roadkit/cli.hpp"

int main(int argc, char** argv) { return roadkit::run_cli(argc, argv); }
