#include <iostream>

#include "benthic/cli.hpp"

int main(int argc, char **argv) {
	std::vector<std::string> args(argv, argv + argc);
	return benthic::run_cli(args, std::cout, std::cerr);
}
