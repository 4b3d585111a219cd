#include "fragscope/parallel.hpp"

#include <cstdlib>
#include <string>

namespace fragscope {
namespace {

std::atomic<unsigned> g_override{0};

unsigned default_thread_count() {
  if (const char* env = std::getenv("FRAGSCOPE_THREADS"); env != nullptr && *env != '\0') {
    try {
      const long n = std::stol(env);
      if (n > 0) return static_cast<unsigned>(n);
    } catch (const std::exception&) {
      // unparsable value: fall through to hardware concurrency
    }
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace

unsigned thread_count() {
  const unsigned n = g_override.load();
  return n != 0 ? n : default_thread_count();
}

void set_thread_count(unsigned n) { g_override.store(n); }

}  // namespace fragscope
