#include "commands.hpp"

int main(int argc, char** argv) { return agrimon::cli::run(argc, argv); }
