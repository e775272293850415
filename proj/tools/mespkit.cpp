// SPDX-License-Identifier: Apache-2.0
#include "mesp/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return mesp::run_cli(argc, argv, std::cout, std::cerr); }
