#include "spdclab/pipeline.hpp"

int main(int argc, char** argv) { return spdclab::io::run_cli(argc, argv); }
