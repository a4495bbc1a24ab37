// SPDX-License-Identifier: Apache-2.0

#include "csifb/cli.hpp"

int main(int argc, char** argv) { return csifb::cli_main(argc, argv); }
