#include "cocolasso/parallel.hpp"

#include <cstdlib>
#include <string>

namespace cocolasso {

int default_thread_count() {
  const char* env = std::getenv("COCOLASSO_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  try {
    const int n = std::stoi(env);
    return n > 0 ? n : 1;
  } catch (const std::exception&) {
    return 1;
  }
}

}  // namespace cocolasso
