#include <iostream>

#include "electroad/cli.hpp"

int main(int argc, char** argv) {
    return electroad::run_command(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
