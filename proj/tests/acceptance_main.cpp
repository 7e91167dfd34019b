#include <cstdio>
#include <string>
#include <thread>

#include "canonflow/verify.hpp"

using namespace canonflow;

int main(int argc, char** argv) {
  const std::string suite = argc > 1 ? argv[1] : "acceptance";
  const auto results = run_checks(suite_checks(suite), std::thread::hardware_concurrency());
  int failed = 0;
  for (const auto& r : results) {
    std::printf("[%s] %-5s %s (%.2fs)\n", r.passed ? "PASS" : "FAIL", r.id.c_str(), r.title.c_str(),
                r.wall_time);
    for (const auto& m : r.metrics) {
      std::printf("        %s %-52s %.3e %s %.3e\n", m.passed() ? " " : "!", m.name.c_str(), m.value,
                  m.upper ? "<=" : ">=", m.bound);
    }
    for (const auto& n : r.notes) std::printf("        note: %s\n", n.c_str());
    if (!r.error.empty()) std::printf("        error: %s\n", r.error.c_str());
    failed += r.passed ? 0 : 1;
  }
  std::printf("%zu/%zu passed\n", results.size() - failed, results.size());
  return failed == 0 ? 0 : 1;
}
