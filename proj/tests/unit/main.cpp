#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "tempo/common/log.hpp"

int main(int argc, char** argv) {
  tempo::set_log_level(tempo::LogLevel::Warn);
  doctest::Context context(argc, argv);
  return context.run();
}
