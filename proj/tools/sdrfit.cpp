#include "sdr/io/cli.hpp"

int main(int argc, char** argv) { return sdr::io::run_cli(argc, argv); }
