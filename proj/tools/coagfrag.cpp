#include "coagfrag/cli.hpp"

int main(int argc, char** argv) { return coagfrag::parse_and_dispatch(argc, argv); }
