#include <cstdio>
#include <cstring>

#include "qh/acceptance.hpp"

int main(int argc, char** argv) {
  qh::AcceptanceOptions opt;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--quick") == 0) {
      opt.quick = true;
    } else {
      std::fprintf(stderr, "usage: %s [--quick]\n", argv[0]);
      return 1;
    }
  }
  try {
    opt.settings = qh::Settings::from_env();
  } catch (const qh::Error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  }
  int failed = 0;
  double total = 0.0;
  for (const auto& r : qh::run_acceptance(opt)) {
    std::printf("%s  [%.2fs]\n", qh::format_line(r).c_str(), r.seconds);
    std::fflush(stdout);
    failed += r.pass() ? 0 : 1;
    total += r.seconds;
  }
  std::printf("%d/12 criteria passed in %.1fs\n", 12 - failed, total);
  return failed == 0 ? 0 : 2;
}
