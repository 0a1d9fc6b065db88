#include "cli.hpp"

int main(int argc, char** argv) { return padx::cli::run(argc, argv); }
