#include <string>
#include <vector>

#include "favsites/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return favsites::cli::run(args);
}
