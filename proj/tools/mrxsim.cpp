#include <mrxsim/cli.hpp>

int main(int argc, char** argv) { return mrx::cli::run(argc, argv); }
