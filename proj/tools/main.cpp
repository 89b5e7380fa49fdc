#include <cstdio>
#include <exception>

#include "lfdeblur/cli.hpp"
#include "lfdeblur/error.hpp"

int main(int argc, char** argv) {
  try {
    return lfdeblur::run_cli(argc, argv);
  } catch (const lfdeblur::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
}
