#include "mixcpd/cli.hpp"

int main(int argc, char** argv) { return mixcpd::run_main(argc, argv); }
