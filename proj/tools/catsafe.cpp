#include "catsafe/cli.hpp"

int main(int argc, char** argv) {
    return catsafe::cli::run(argc, argv);
}
