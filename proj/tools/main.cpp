#include "cli.hpp"

int main(int argc, char** argv) {
  return ctcurve::cli::run(argc, argv, {std::cout, std::cerr});
}
