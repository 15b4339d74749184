#include "effjudge/cli.hpp"

int main(int argc, char** argv) { return effjudge::run_cli(argc, argv); }
