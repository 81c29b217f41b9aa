#include <iostream>
#include <string>
#include <vector>

#include "cnu/experiment.hpp"

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return cnu::run_cli(args, std::cout, std::cerr);
}
