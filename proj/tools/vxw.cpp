#include <string>
#include <vector>

#include "vxw/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return vxw::cli::run(args);
}
