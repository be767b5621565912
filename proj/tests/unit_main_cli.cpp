#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <string>

// path of the reach binary under test, handed over by ctest
std::string g_reach_binary;

int main(int argc, char** argv) {
  if (argc > 1 && argv[argc - 1][0] != '-') {
    g_reach_binary = argv[argc - 1];
    --argc;
  }
  doctest::Context context(argc, argv);
  return context.run();
}
