#include "slefvar/harness.hpp"

int main(int argc, char** argv) { return slefvar::cli_main(argc, argv); }
