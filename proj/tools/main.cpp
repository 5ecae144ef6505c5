#include "clickmodel/cli.hpp"

int main(int argc, char** argv) { return clickmodel::run(argc, argv); }
