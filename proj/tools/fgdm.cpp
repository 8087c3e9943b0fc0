// SPDX-License-Identifier: Apache-2.0
#include "fgdm/cli.hpp"

int main(int argc, char** argv) { return fgdm::cli::run(argc, argv); }
