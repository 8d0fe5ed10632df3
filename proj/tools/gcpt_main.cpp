#include <string>
#include <vector>

#include "gcpt/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return gcpt::cli::run(args);
}
