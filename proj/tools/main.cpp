// Copyright Contributors to the tnrf project
// SPDX-License-Identifier: Apache-2.0

#include "cli.h"

#include <iostream>

int main(int argc, char **argv) { return tnrf::cli::run(argc, argv, std::cout, std::cerr); }
