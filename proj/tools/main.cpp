#include "cli.hpp"

int main(int argc, char** argv) { return simcurate::cli::run(argc, argv); }
