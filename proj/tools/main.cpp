#include <string>
#include <vector>

#include "multirate/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return multirate::cli::run(args);
}
