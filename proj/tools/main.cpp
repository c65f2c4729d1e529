#include "cli.hpp"

int main(int argc, char** argv) { return ppg::cli::run(argc, argv); }
