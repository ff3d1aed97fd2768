#include "app.hpp"

int main(int argc, char** argv) { return qspiral::cli::dispatch(argc, argv); }
