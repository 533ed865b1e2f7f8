#include "cli_app.hpp"

int main(int argc, char** argv) { return majority::run_cli(argc, argv); }
