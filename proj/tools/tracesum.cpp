#include <iostream>

#include "tracesum/cli.hpp"

int main(int argc, char **argv)
{
  return tracesum::run_cli(argc, argv, std::cout, std::cerr);
}
