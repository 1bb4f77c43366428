#include "scplus/pipeline.hpp"

int main(int argc, char** argv) { return scplus::run_cli(argc, argv); }
