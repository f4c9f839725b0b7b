#include "likstab/parallel.hpp"

#include <cstdlib>
#include <string>

namespace likstab {

namespace {
std::atomic<int> g_default{0};
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("LIKSTAB_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return v;
    } catch (...) {
    }
  }
  return 1;
}

void set_default_threads(int n) { g_default.store(n > 0 ? n : 0); }

int default_threads() {
  const int v = g_default.load();
  return v > 0 ? v : resolve_threads(0);
}

}  // namespace likstab
