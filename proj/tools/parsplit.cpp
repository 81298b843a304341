#include <iostream>

#include "parsplit/cli.hpp"

int main(int argc, char** argv)
{
    return parsplit::run_cli(argc, argv, std::cout, std::cerr);
}
