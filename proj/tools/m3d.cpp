#include "m3d/cli.hpp"

int main(int argc, char** argv) { return m3d::run(argc, argv); }
