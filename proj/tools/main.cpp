#include "msnfa/cli.hpp"

int main(int argc, char** argv) { return msnfa::run_cli(argc, argv); }
