#include "hdbeta/cli.hpp"

int main(int argc, char** argv) { return hdbeta::dispatch(argc, argv); }
